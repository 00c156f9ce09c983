//! Edge file → snapshots → labels, through the on-disk cache.
//!
//! ```text
//! cargo run --example ingest_snapshots                      # synthetic stream
//! cargo run --example ingest_snapshots -- soc-alpha.csv     # src,dst,weight,timestamp
//! cargo run --example ingest_snapshots -- uci.txt src,dst,timestamp whitespace
//! ```

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use roland::snapshots::synthetic::SyntheticStream;
use roland::snapshots::{build_labels, load_cached, Delimiter, EdgeSchema, Frequency};

fn main() -> roland::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let tmp = std::env::temp_dir().join(format!("roland-ingest-{}", std::process::id()));
    std::fs::create_dir_all(&tmp).unwrap();

    let (path, schema, frequency) = match args.first() {
        Some(p) => {
            let cols = args.get(1).map_or("src,dst,weight,timestamp", String::as_str);
            let delim: Delimiter = args.get(2).map_or(Ok(Delimiter::Char(',')), |d| d.parse())?;
            (p.into(), EdgeSchema::from_columns(cols, delim)?, Frequency::Weekly)
        }
        None => {
            let stream = SyntheticStream::default();
            let p = tmp.join("synthetic.csv");
            let mut f = std::fs::File::create(&p).unwrap();
            for e in stream.generate()?.edges() {
                writeln!(f, "{},{},{},{}", e.src, e.dst, e.weight, e.timestamp).unwrap();
            }
            (p, EdgeSchema::default(), Frequency::Seconds(stream.period))
        }
    };

    let cache = tmp.join("cache");
    let g = load_cached(&path, &schema, frequency, &cache)?;
    println!("{}: {} nodes, {} edges, {} snapshots ({frequency})", path.display(), g.node_count, g.total_edges(), g.len());
    for s in g.snapshots.iter().take(5) {
        println!("  t={:<3} [{:.0}, {:.0})  {} edges", s.index, s.window.0, s.window.1, s.edge_count());
    }

    // Cache hit: same bytes, schema and frequency give the same graph back.
    let again = load_cached(&path, &schema, frequency, &cache)?;
    assert_eq!(again, g);

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let labels = build_labels(&g, 0, 0.1, 100, &mut rng)?;
    println!(
        "labels for t=0: {} positives ({} train / {} val), {} pairs scored at evaluation",
        labels.positives.len(),
        labels.train_pos.len(),
        labels.val_pos.len(),
        labels.scored_pair_count()
    );
    std::fs::remove_dir_all(&tmp).ok();
    Ok(())
}
