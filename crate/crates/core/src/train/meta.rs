use crate::model::Roland;
use crate::{Error, Result};

/// Running meta-model used to warm-start every snapshot's training.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaParams {
    pub model: Roland,
    pub alpha: f64,
}

impl MetaParams {
    pub fn new(model: Roland, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self { model, alpha })
    }

    pub fn element_count(&self) -> usize {
        self.model.param_count() + self.model.buffer_count()
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::config(format!("alpha = {alpha} outside [0, 1]")))
    }
}

/// `θ_meta ← (1 − α)·θ_meta + α·θ_trained` for every weight and every batch-norm
/// running statistic.
pub fn meta_update(mut meta: MetaParams, trained: &Roland) -> Result<MetaParams> {
    check_alpha(meta.alpha)?;
    let alpha = meta.alpha;
    let mismatch = || Error::config("meta model and trained model have different architectures");
    if meta.model.config != trained.config {
        return Err(mismatch());
    }
    let theirs = trained.params();
    let mine = meta.model.params_mut();
    if mine.len() != theirs.len() {
        return Err(mismatch());
    }
    for (m, t) in mine.into_iter().zip(theirs) {
        if m.value.dim() != t.value.dim() || m.name != t.name {
            return Err(mismatch());
        }
        blend(&mut m.value, &t.value, alpha);
    }
    for (m, t) in meta.model.batch_norms_mut().into_iter().zip(trained.batch_norms()) {
        if m.stats.running_mean.len() != t.stats.running_mean.len() {
            return Err(mismatch());
        }
        blend(&mut m.stats.running_mean, &t.stats.running_mean, alpha);
        blend(&mut m.stats.running_var, &t.stats.running_var, alpha);
    }
    Ok(meta)
}

fn blend<D: ndarray::Dimension>(meta: &mut ndarray::Array<f64, D>, trained: &ndarray::Array<f64, D>, alpha: f64) {
    if alpha == 1.0 {
        // Exact copy, so α = 1 is bit-identical to warm-starting from θ.
        meta.assign(trained);
    } else if alpha != 0.0 {
        meta.zip_mut_with(trained, |m, &t| *m = (1.0 - alpha) * *m + alpha * t);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelConfig, UpdateKind};

    fn filled(v: f64) -> Roland {
        let mut m = Roland::new(ModelConfig { hidden_dim: 2, ..ModelConfig::default() }, 1).unwrap();
        for p in m.params_mut() {
            p.value.fill(v);
        }
        for bn in m.batch_norms_mut() {
            bn.stats.running_mean.fill(v);
            bn.stats.running_var.fill(v);
        }
        m
    }

    #[test]
    fn alpha_boundaries_and_midpoint() {
        let trained = filled(2.0);
        let one = meta_update(MetaParams::new(filled(0.0), 1.0).unwrap(), &trained).unwrap();
        assert_eq!(one.model, trained);
        let zero = meta_update(MetaParams::new(filled(0.0), 0.0).unwrap(), &trained).unwrap();
        assert_eq!(zero.model, filled(0.0));
        let half = meta_update(MetaParams::new(filled(0.0), 0.5).unwrap(), &trained).unwrap();
        assert_eq!(half.model, filled(1.0));
    }

    #[test]
    fn bad_alpha_and_shapes_are_config_errors() {
        assert!(matches!(MetaParams::new(filled(0.0), 1.5), Err(Error::Config(_))));
        let other = Roland::new(
            ModelConfig {
                hidden_dim: 2,
                update: UpdateKind::Mlp,
                ..ModelConfig::default()
            },
            1,
        )
        .unwrap();
        let meta = MetaParams::new(filled(0.0), 0.5).unwrap();
        assert!(matches!(meta_update(meta, &other), Err(Error::Config(_))));
    }
}
