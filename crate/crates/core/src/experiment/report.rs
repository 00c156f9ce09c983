use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::run::{completed_summary, mean_std, read_reports, ExperimentSummary, CONFIG_FILE};
use super::ExperimentConfig;
use crate::eval::{EvalReport, Protocol};
use crate::{Error, Result};

/// A completed run directory, read back from disk.
#[derive(Debug, Clone)]
pub struct LoadedRun {
    pub dir: PathBuf,
    pub config: ExperimentConfig,
    pub summary: ExperimentSummary,
    pub reports: Vec<(u64, EvalReport)>,
}

impl LoadedRun {
    /// Reads a run and checks that its summary agrees with the per-step records.
    pub fn load(dir: &Path) -> Result<Self> {
        let summary = completed_summary(dir)?
            .ok_or_else(|| Error::Format(format!("{}: run is incomplete", dir.display())))?;
        let config = ExperimentConfig::load(dir.join(CONFIG_FILE))?;
        let reports = read_reports(dir)?;
        let seeds: Vec<u64> = summary.seeds.iter().map(|s| s.seed).collect();
        if reports.iter().map(|(s, _)| *s).collect::<Vec<_>>() != seeds {
            return Err(Error::Format(format!("{}: seed reports do not match the summary", dir.display())));
        }
        for ((_, r), s) in reports.iter().zip(&summary.seeds) {
            let steps: Vec<f64> = r.per_step.iter().filter_map(|x| x.mrr).collect();
            if mean_std(&steps).0 != r.summary.mean_mrr || r.summary.mean_mrr != s.mean_mrr {
                return Err(Error::Format(format!(
                    "{}: seed {} mean MRR disagrees with its per-step records",
                    dir.display(),
                    s.seed
                )));
            }
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            config,
            summary,
            reports,
        })
    }

    fn name(&self) -> String {
        self.dir.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned())
    }
}

/// Runs gathered for reporting, plus the directories that could not be read.
#[derive(Debug, Clone, Default)]
pub struct ReportTables {
    pub runs: Vec<LoadedRun>,
    pub skipped: Vec<(PathBuf, String)>,
}

/// Collects run directories. Each path may be a run directory or a root whose
/// non-hidden subdirectories are runs.
pub fn collect_runs(paths: &[PathBuf]) -> ReportTables {
    let mut t = ReportTables::default();
    for p in paths {
        let candidates = if p.join(CONFIG_FILE).exists() {
            vec![p.clone()]
        } else {
            match fs::read_dir(p) {
                Ok(entries) => {
                    let mut dirs: Vec<PathBuf> = entries
                        .filter_map(|e| e.ok())
                        .map(|e| e.path())
                        .filter(|d| d.is_dir() && !d.file_name().is_some_and(|n| n.to_string_lossy().starts_with('.')))
                        .collect();
                    dirs.sort();
                    dirs
                }
                Err(e) => {
                    t.skipped.push((p.clone(), e.to_string()));
                    continue;
                }
            }
        };
        for d in candidates {
            match LoadedRun::load(&d) {
                Ok(r) => t.runs.push(r),
                Err(e) => t.skipped.push((d, e.to_string())),
            }
        }
    }
    t
}

fn num(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |x| format!("{x:.6}"))
}

fn aggregation(c: &ExperimentConfig) -> String {
    format!("{:?}", c.aggregation).to_lowercase()
}

fn alpha(a: Option<f64>) -> String {
    a.map_or_else(|| "none".into(), |x| x.to_string())
}

/// Config fingerprint with the meta-learning knobs and seeds neutralised, so
/// runs differing only in α compare against each other.
fn meta_group(c: &ExperimentConfig) -> String {
    ExperimentConfig {
        meta: true,
        alpha: 1.0,
        seeds: vec![0],
        ..c.clone()
    }
    .fingerprint()
}

impl ReportTables {
    /// One row per run: dataset, protocol, architecture and cross-seed MRR.
    pub fn mrr_table(&self) -> String {
        let mut out = String::from(
            "# roland.report.mrr/1\ndataset\tprotocol\tupdate\talpha\tn_pre\tn_mp\tn_post\tbatch_norm\tskip\taggregation\tseeds\tmean_mrr\tstd_mrr\tmean_val_mrr\trun\n",
        );
        for r in &self.runs {
            let c = &r.config;
            let s = &r.summary;
            out += &format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                s.dataset,
                s.protocol,
                s.update,
                alpha(s.alpha),
                c.n_pre,
                c.n_mp,
                c.n_post,
                c.batch_norm,
                c.skip,
                aggregation(c),
                s.seeds.len(),
                num(s.mean_mrr),
                num(s.std_mrr),
                num(s.mean_val_mrr),
                r.name()
            );
        }
        out
    }

    /// Per group of runs that differ only in α: the α with the best mean
    /// validation MRR, its test MRR, the α = 1 test MRR and the relative gain.
    pub fn meta_gain_table(&self) -> String {
        let mut groups: BTreeMap<(String, Protocol, String, String), Vec<&LoadedRun>> = BTreeMap::new();
        for r in &self.runs {
            let key = (r.summary.dataset.clone(), r.summary.protocol, r.summary.update.to_string(), meta_group(&r.config));
            groups.entry(key).or_default().push(r);
        }
        let mut out = String::from(
            "# roland.report.meta_gain/1\ndataset\tprotocol\tupdate\tbest_alpha\tbest_alpha_mrr\tbest_alpha_val_mrr\talpha1_mrr\tgain_pct\n",
        );
        for ((dataset, protocol, update, _), runs) in groups {
            let baseline = runs.iter().find(|r| r.summary.alpha == Some(1.0)).or_else(|| runs.iter().find(|r| r.summary.alpha.is_none()));
            let best = runs
                .iter()
                .filter(|r| r.summary.alpha.is_some() && r.summary.mean_val_mrr.is_some())
                .fold(None::<&&LoadedRun>, |b, r| match b {
                    Some(b) if b.summary.mean_val_mrr >= r.summary.mean_val_mrr => Some(b),
                    _ => Some(r),
                });
            let (Some(base), Some(best)) = (baseline, best) else { continue };
            let gain = match (best.summary.mean_mrr, base.summary.mean_mrr) {
                (Some(b), Some(a)) if a > 0.0 => Some(100.0 * (b - a) / a),
                _ => None,
            };
            out += &format!(
                "{dataset}\t{protocol}\t{update}\t{}\t{}\t{}\t{}\t{}\n",
                alpha(best.summary.alpha),
                num(best.summary.mean_mrr),
                num(best.summary.mean_val_mrr),
                num(base.summary.mean_mrr),
                gain.map_or_else(|| "NA".into(), |g| format!("{g:.2}")),
            );
        }
        out
    }

    /// One row per scored step per seed: MRR and training epochs over time.
    pub fn steps_table(&self) -> String {
        let mut out = String::from("# roland.report.steps/1\nrun\tdataset\tupdate\talpha\tseed\tt\tmrr\tepochs_run\tn_positives\n");
        for r in &self.runs {
            for (seed, rep) in &r.reports {
                for s in rep.per_step.iter().filter(|s| s.mrr.is_some()) {
                    out += &format!(
                        "{}\t{}\t{}\t{}\t{seed}\t{}\t{}\t{}\t{}\n",
                        r.name(),
                        r.summary.dataset,
                        r.summary.update,
                        alpha(r.summary.alpha),
                        s.t,
                        num(s.mrr),
                        s.epochs_run,
                        s.n_positives
                    );
                }
            }
        }
        out
    }

    /// Long-format per-seed MRR keyed by each ablation option's value, for
    /// plotting distributions per option.
    pub fn ablation_table(&self) -> String {
        let mut out = String::from("# roland.report.ablation/1\noption\tvalue\tdataset\tupdate\tseed\tmean_mrr\trun\n");
        for r in &self.runs {
            let c = &r.config;
            let options = [
                ("batch_norm", c.batch_norm.to_string()),
                ("skip", c.skip.to_string()),
                ("aggregation", aggregation(c)),
            ];
            for s in &r.summary.seeds {
                for (opt, val) in &options {
                    out += &format!(
                        "{opt}\t{val}\t{}\t{}\t{}\t{}\t{}\n",
                        r.summary.dataset,
                        r.summary.update,
                        s.seed,
                        num(s.mean_mrr),
                        r.name()
                    );
                }
            }
        }
        out
    }

    pub fn skipped_table(&self) -> String {
        let mut out = String::from("# roland.report.skipped/1\npath\treason\n");
        for (p, why) in &self.skipped {
            out += &format!("{}\t{}\n", p.display(), why.replace(['\t', '\n'], " "));
        }
        out
    }

    /// Writes every table into `dir` and returns the paths written.
    pub fn write_all(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut written = Vec::new();
        for (name, body) in [
            ("mrr.tsv", self.mrr_table()),
            ("meta_gain.tsv", self.meta_gain_table()),
            ("steps.tsv", self.steps_table()),
            ("ablation.tsv", self.ablation_table()),
            ("skipped.tsv", self.skipped_table()),
        ] {
            let p = dir.join(name);
            fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
            written.push(p);
        }
        Ok(written)
    }
}
