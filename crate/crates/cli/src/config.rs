//! The run configuration shared by every subcommand. It is read from a flat
//! JSON file and overridden field by field from the command line.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use alpha_patch::lemma_lab::CurveKind;
use alpha_patch::stability::PerturbationKind;
use alpha_patch::DiffScheme;

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Kernel exponent, 0 < alpha < 1/2.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Number of boundary nodes (base resolution for `convergence`).
    #[arg(long = "n")]
    pub n_nodes: Option<usize>,
    /// Time step (base step for `convergence`).
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Seed for randomized test curves.
    #[arg(long)]
    pub seed: Option<u64>,
    /// `spectral` or `fd4`.
    #[arg(long)]
    pub diff_scheme: Option<String>,
    /// Write a snapshot every this many steps.
    #[arg(long)]
    pub emit_every: Option<usize>,

    /// circle, ellipse, star, rough_c1beta or w2p_spike.
    #[arg(long)]
    pub curve: Option<String>,
    #[arg(long)]
    pub radius: Option<f64>,
    /// Ellipse semi-axis along x.
    #[arg(long)]
    pub a: Option<f64>,
    /// Ellipse semi-axis along y.
    #[arg(long)]
    pub b: Option<f64>,
    /// Star symmetry.
    #[arg(long)]
    pub k: Option<u32>,
    /// Star amplitude.
    #[arg(long)]
    pub amp: Option<f64>,
    /// Tangent Hölder exponent of `rough_c1beta`.
    #[arg(long)]
    pub beta0: Option<f64>,
    /// Curvature integrability of `w2p_spike`.
    #[arg(long)]
    pub p0: Option<f64>,
    /// Spike strength of `w2p_spike`.
    #[arg(long)]
    pub strength: Option<f64>,
    /// Snapshot or `{"nodes": [[x, y], ...]}` file; replaces `curve`.
    #[arg(long)]
    pub curve_file: Option<PathBuf>,

    /// normal-bump, fourier-mode or label-shift.
    #[arg(long)]
    pub perturbation: Option<String>,
    /// Perturbation size of the second twin.
    #[arg(long)]
    pub epsilon: Option<f64>,

    /// Comma-separated estimate ids or prefixes such as L2.2 or L5.1.
    #[arg(long)]
    pub estimates: Option<String>,
    /// Largest acceptable refinement stability.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Curvature integrability used by the W^{2,p} estimates.
    #[arg(long)]
    pub p: Option<f64>,

    /// Number of resolutions in a convergence study.
    #[arg(long)]
    pub levels: Option<usize>,

    /// Test simplicity of every emitted snapshot.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub check_simple: Option<bool>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($field:ident),* $(,)?) => {
        $(if $top.$field.is_some() {
            $base.$field = $top.$field;
        })*
    };
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Values set in `top` replace those in `self`.
    pub fn overlay(mut self, top: RunConfig) -> Self {
        overlay!(self, top;
            alpha, n_nodes, dt, t_end, output_dir, seed, diff_scheme, emit_every,
            curve, radius, a, b, k, amp, beta0, p0, strength, curve_file,
            perturbation, epsilon, estimates, threshold, p, levels, check_simple,
        );
        self
    }

    pub fn alpha(&self) -> Result<f64> {
        self.alpha.context("missing required field alpha")
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("alpha-patch-out"))
    }

    pub fn diff_scheme(&self) -> Result<DiffScheme> {
        match &self.diff_scheme {
            None => Ok(DiffScheme::default()),
            Some(s) => DiffScheme::parse(s).with_context(|| format!("invalid diff_scheme {s:?}: expected spectral or fd4")),
        }
    }

    pub fn perturbation(&self) -> Result<PerturbationKind> {
        match &self.perturbation {
            None => Ok(PerturbationKind::NormalBump),
            Some(s) => PerturbationKind::parse(s)
                .with_context(|| format!("invalid perturbation {s:?}: expected normal-bump, fourier-mode or label-shift")),
        }
    }

    pub fn curve_kind(&self) -> Result<CurveKind> {
        let name = self.curve.as_deref().unwrap_or("circle");
        Ok(match name {
            "circle" => CurveKind::Circle {
                radius: self.radius.unwrap_or(1.0),
            },
            "ellipse" => CurveKind::Ellipse {
                a: self.a.unwrap_or(2.0),
                b: self.b.unwrap_or(1.0),
            },
            "star" => CurveKind::Star {
                k: self.k.unwrap_or(5),
                amp: self.amp.unwrap_or(0.1),
            },
            "rough_c1beta" => CurveKind::RoughC1Beta {
                beta0: self.beta0.unwrap_or(0.6),
                seed: self.seed.unwrap_or(7),
            },
            "w2p_spike" => CurveKind::W2pSpike {
                p0: self.p0.unwrap_or(4.0),
                strength: self.strength.unwrap_or(0.25),
            },
            other => bail!("invalid curve {other:?}: expected circle, ellipse, star, rough_c1beta or w2p_spike"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_values() {
        let file: RunConfig = serde_json::from_str(r#"{"alpha": 0.1, "n_nodes": 64, "curve": "ellipse"}"#).unwrap();
        let flags = RunConfig {
            alpha: Some(0.3),
            ..Default::default()
        };
        let merged = file.overlay(flags);
        assert_eq!(merged.alpha, Some(0.3));
        assert_eq!(merged.n_nodes, Some(64));
        assert_eq!(merged.curve.as_deref(), Some("ellipse"));
    }

    #[test]
    fn unknown_field_is_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"alpah": 0.1}"#).is_err());
    }

    #[test]
    fn missing_alpha_names_the_field() {
        let e = RunConfig::default().alpha().unwrap_err();
        assert!(e.to_string().contains("alpha"));
    }

    #[test]
    fn curve_names() {
        let mut c = RunConfig::default();
        assert_eq!(c.curve_kind().unwrap(), CurveKind::Circle { radius: 1.0 });
        c.curve = Some("blob".into());
        assert!(c.curve_kind().is_err());
    }
}
