//! Batches of runs: one row per (sweep point, repetition).
//!
//! Each row derives its instance and planner seed from the base seed and its
//! repetition index alone, so rows can run in any order or in parallel and
//! still produce the same numbers.

use crate::domains::{
    domain_by_name, generate_clutter_with, hanoi_scenario, kitchen_scenario, ClutterParams, DomainError,
};
use crate::planner::{run_multi, run_single, DomainTemplate, PlannerConfig, PlannerError};
use crate::report::RawRow;
use crate::workspace::{Category, Scenario};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub domain: String,
    /// Object counts for clutter, disk counts for Hanoi; ignored for the
    /// kitchen and for fixed scenarios.
    pub points: Vec<usize>,
    pub robots: usize,
    pub targets: Option<usize>,
    pub reps: usize,
    pub seed: u64,
    pub config: PlannerConfig,
    pub scenario: Option<Scenario>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExperimentError {
    #[error("unknown domain {0}")]
    UnknownDomain(String),
    #[error("nothing to run: {0}")]
    Empty(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Planner(#[from] PlannerError),
}

impl SweepSpec {
    pub fn new(domain: &str, points: Vec<usize>, reps: usize, seed: u64, config: PlannerConfig) -> Self {
        SweepSpec {
            domain: domain.to_string(),
            points,
            robots: 1,
            targets: None,
            reps,
            seed,
            config,
            scenario: None,
        }
    }

    pub fn template(&self) -> Result<DomainTemplate, ExperimentError> {
        domain_by_name(&self.domain).ok_or_else(|| ExperimentError::UnknownDomain(self.domain.clone()))
    }

    /// Every (point, rep) pair in output order.
    pub fn rows(&self) -> Result<Vec<(usize, usize)>, ExperimentError> {
        if self.reps == 0 {
            return Err(ExperimentError::Empty("repetitions must be at least 1".into()));
        }
        let points = if self.scenario.is_some() || self.domain == "kitchen" {
            vec![0]
        } else {
            self.points.clone()
        };
        if points.is_empty() {
            return Err(ExperimentError::Empty("empty sweep".into()));
        }
        Ok(points.iter().flat_map(|&p| (0..self.reps).map(move |r| (p, r))).collect())
    }

    pub fn row_seed(&self, rep: usize) -> u64 {
        self.seed.wrapping_add(rep as u64)
    }

    fn instance(&self, point: usize, seed: u64) -> Result<Scenario, ExperimentError> {
        if let Some(sc) = &self.scenario {
            return Ok(sc.clone());
        }
        Ok(match self.domain.as_str() {
            "hanoi" => hanoi_scenario(point),
            "kitchen" => kitchen_scenario(),
            _ => {
                let mut p = ClutterParams::new(point, self.robots, seed);
                if let Some(t) = self.targets {
                    p.targets = t;
                }
                generate_clutter_with(p)?
            }
        })
    }
}

fn movable_count(sc: &Scenario) -> usize {
    sc.objects.iter().filter(|o| o.category != Category::Fixture).count()
}

fn try_row(spec: &SweepSpec, domain: &DomainTemplate, point: usize, rep: usize) -> Result<Vec<RawRow>, ExperimentError> {
    let seed = spec.row_seed(rep);
    let sc = spec.instance(point, seed)?;
    let objects = movable_count(&sc);
    let config = PlannerConfig {
        seed,
        ..spec.config.clone()
    };
    let snap = sc.snapshot();
    let first_robot = sc
        .robots
        .first()
        .map(|r| r.id.clone())
        .ok_or_else(|| ExperimentError::Empty("scenario has no robot".into()))?;
    if sc.robots.len() > 1 || sc.targets.len() > 1 {
        let m = run_multi(domain, &snap, &sc.targets, &config)?;
        return Ok(m
            .per_robot
            .iter()
            .map(|r| RawRow::from_metrics(objects, &r.robot, rep, seed, &r.metrics))
            .collect());
    }
    let target = sc.targets.first().map(String::as_str);
    let m = run_single(domain, &snap, &first_robot, target, &config)?;
    Ok(vec![RawRow::from_metrics(objects, &first_robot, rep, seed, &m)])
}

/// Runs one row. Setup failures become a row carrying the error.
pub fn run_row(spec: &SweepSpec, domain: &DomainTemplate, point: usize, rep: usize) -> Vec<RawRow> {
    try_row(spec, domain, point, rep)
        .unwrap_or_else(|e| vec![RawRow::failed(point, "-", rep, spec.row_seed(rep), e.to_string())])
}

/// Runs the whole sweep in order on the calling thread.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<RawRow>, ExperimentError> {
    let domain = spec.template()?;
    Ok(spec
        .rows()?
        .into_iter()
        .flat_map(|(p, r)| run_row(spec, &domain, p, r))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::ClockMode;

    fn logical() -> PlannerConfig {
        PlannerConfig {
            clock: ClockMode::Logical,
            ..Default::default()
        }
    }

    #[test]
    fn rows_follow_points_then_reps() {
        let s = SweepSpec::new("clutter", vec![4, 8], 3, 0, logical());
        assert_eq!(s.rows().unwrap(), vec![(4, 0), (4, 1), (4, 2), (8, 0), (8, 1), (8, 2)]);
        let s = SweepSpec::new("clutter", vec![4], 0, 0, logical());
        assert!(s.rows().is_err());
    }

    #[test]
    fn sweep_is_reproducible() {
        let s = SweepSpec::new("clutter", vec![4], 2, 11, logical());
        assert_eq!(run_sweep(&s).unwrap(), run_sweep(&s).unwrap());
    }

    #[test]
    fn setup_errors_become_rows() {
        let s = SweepSpec::new("clutter", vec![5000], 1, 0, logical());
        let rows = run_sweep(&s).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].is_error());
    }
}
