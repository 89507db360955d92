//! Malicious-share simulation: deal, corrupt, reconstruct, verify, tally.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::lattice::{sample_invertible, DiscreteGaussian, Mat};
use crate::par::{map_range, Execution};
use crate::rng::Streams;
use crate::vss::{
    encode_link, reconstruct, sample_error, verify_shares, Dealer, Secret, ShareBundle, VssError, VssParams,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorruptionMode {
    /// A well-formed encoding of `A_{j+1}·S' + E` for a random invertible `S'`.
    EncodingReplacement,
    /// A fresh discrete-Gaussian matrix in place of `D_j`.
    GaussianReplacement,
    /// One bit of one entry of `D_j` flipped.
    BitFlip,
    /// The coalition lacks one member of `Ω`; malicious parties strip token
    /// elements so the combined count passes the membership test.
    TokenTampering,
}

impl std::str::FromStr for CorruptionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "encoding-replacement" => Ok(CorruptionMode::EncodingReplacement),
            "gaussian-replacement" => Ok(CorruptionMode::GaussianReplacement),
            "bit-flip" => Ok(CorruptionMode::BitFlip),
            "token-tampering" => Ok(CorruptionMode::TokenTampering),
            _ => Err(format!("unknown corruption mode {s:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub seed: u64,
    pub trials: usize,
    pub parties: usize,
    pub gamma0: Vec<Vec<usize>>,
    pub secret: u64,
    pub malicious: usize,
    pub mode: CorruptionMode,
    pub params: VssParams,
    #[serde(skip)]
    pub exec: Execution,
}

impl SimulationConfig {
    /// `ℓ = 5`, `Γ₀ = {{1,2,3}}`, `k = 3`, desk parameters.
    pub fn desk(malicious: usize, mode: CorruptionMode, trials: usize, seed: u64) -> Self {
        SimulationConfig {
            seed,
            trials,
            parties: 5,
            gamma0: vec![vec![1, 2, 3]],
            secret: 3,
            malicious,
            mode,
            params: VssParams::desk(),
            exec: Execution::Parallel,
        }
    }

    pub fn validate(&self) -> Result<(), VssError> {
        if self.gamma0.is_empty() {
            return Err(VssError::EmptyGamma);
        }
        let smallest = self.gamma0.iter().map(Vec::len).min().unwrap_or(0);
        let coalition = match self.mode {
            CorruptionMode::TokenTampering => smallest.saturating_sub(1),
            _ => smallest,
        };
        if self.malicious > 0 && self.malicious >= coalition.max(1) {
            return Err(VssError::Params(format!(
                "{} malicious parties leave no honest member in a coalition of {coalition}",
                self.malicious
            )));
        }
        if self.mode == CorruptionMode::TokenTampering && self.malicious == 0 {
            return Err(VssError::Params("token tampering needs at least one malicious party".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Outcome {
    Recovered { k: u64 },
    WrongSecret { k: u64 },
    Unauthorized,
    Failed { reason: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub instance: u64,
    pub coalition: Vec<usize>,
    pub malicious: Vec<usize>,
    pub outcome: Outcome,
    /// Absent when the coalition could not open the instance header.
    pub verdicts: Option<BTreeMap<usize, bool>>,
    pub detected: bool,
    /// Verification checks run on malicious chain positions, and how many passed.
    pub checks: usize,
    pub checks_accepted: usize,
    pub honest_flagged: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub seed: u64,
    pub trials: usize,
    pub mode: Option<CorruptionMode>,
    pub malicious: usize,
    pub detected: usize,
    pub detection_rate: Option<f64>,
    /// Wilson score interval.
    pub detection_ci95: Option<(f64, f64)>,
    pub recovered: usize,
    pub reconstruction_success_rate: Option<f64>,
    pub unauthorized: usize,
    pub checks: usize,
    pub checks_accepted: usize,
    pub per_check_acceptance: Option<f64>,
    pub honest_flagged: usize,
    pub records: Vec<TrialRecord>,
}

impl SimulationReport {
    pub fn empty(seed: u64) -> Self {
        SimulationReport::aggregate(seed, None, 0, Vec::new())
    }

    fn aggregate(seed: u64, mode: Option<CorruptionMode>, malicious: usize, records: Vec<TrialRecord>) -> Self {
        let trials = records.len();
        let detected = records.iter().filter(|r| r.detected).count();
        let recovered = records.iter().filter(|r| matches!(r.outcome, Outcome::Recovered { .. })).count();
        let unauthorized = records.iter().filter(|r| r.outcome == Outcome::Unauthorized).count();
        let checks = records.iter().map(|r| r.checks).sum();
        let checks_accepted = records.iter().map(|r| r.checks_accepted).sum();
        let rate = |x: usize, n: usize| (n > 0).then(|| x as f64 / n as f64);
        SimulationReport {
            seed,
            trials,
            mode,
            malicious,
            detected,
            detection_rate: rate(detected, trials),
            detection_ci95: (trials > 0).then(|| wilson(detected, trials)),
            recovered,
            reconstruction_success_rate: rate(recovered, trials),
            unauthorized,
            checks,
            checks_accepted,
            per_check_acceptance: rate(checks_accepted, checks),
            honest_flagged: records.iter().map(|r| r.honest_flagged).sum(),
            records,
        }
    }
}

/// 95% Wilson score interval for `x` successes out of `n`.
pub fn wilson(x: usize, n: usize) -> (f64, f64) {
    let z = 1.959_963_984_540_054_f64;
    let (x, n) = (x as f64, n as f64);
    let ph = x / n;
    let denom = 1.0 + z * z / n;
    let centre = (ph + z * z / (2.0 * n)) / denom;
    let half = z * (ph * (1.0 - ph) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

pub fn run_simulation(config: &SimulationConfig) -> Result<SimulationReport, VssError> {
    let dealer = Dealer::new(config.params.clone())?.with_execution(Execution::Sequential);
    run_simulation_with(&dealer, config)
}

/// Trials run on the worker pool, each from its own named stream, so the
/// report does not depend on scheduling.
pub fn run_simulation_with(dealer: &Dealer, config: &SimulationConfig) -> Result<SimulationReport, VssError> {
    config.validate()?;
    let k = Secret::new(config.secret, config.params.lwe.p)?;
    let streams = Streams::new(config.seed).child("sim");
    let records = map_range(config.exec, config.trials, |t| {
        run_trial(dealer, config, &k, t, &streams.child(&format!("trial/{t}")))
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    Ok(SimulationReport::aggregate(config.seed, Some(config.mode), config.malicious, records))
}

fn run_trial(
    dealer: &Dealer,
    config: &SimulationConfig,
    k: &Secret,
    trial: usize,
    streams: &Streams,
) -> Result<TrialRecord, VssError> {
    let dealing = dealer.deal(k, &config.gamma0, config.parties, &mut streams.rng("deal"))?;
    let mut rng = streams.rng("adversary");
    let slot = rng.gen_range(0..dealing.view.instances.len());
    let inst = &dealing.view.instances[slot];
    let lwe = &dealer.params().lwe;

    let mut coalition: Vec<usize> = inst.omega.clone();
    if config.mode == CorruptionMode::TokenTampering {
        let drop = rng.gen_range(0..coalition.len());
        coalition.remove(drop);
    } else {
        for p in 1..=config.parties {
            if !coalition.contains(&p) && rng.gen::<bool>() {
                coalition.push(p);
            }
        }
    }
    coalition.sort_unstable();
    let mut malicious: Vec<usize> = match config.mode {
        CorruptionMode::TokenTampering => coalition.choose_multiple(&mut rng, config.malicious).copied().collect(),
        _ => inst.order.choose_multiple(&mut rng, config.malicious).copied().collect(),
    };
    malicious.sort_unstable();

    let mut bundles: Vec<ShareBundle> = coalition.iter().map(|&p| dealing.bundles[p - 1].clone()).collect();
    let holder =
        |party: usize| coalition.iter().position(|&p| p == party).expect("malicious parties are in the coalition");
    match config.mode {
        CorruptionMode::TokenTampering => {
            let mut combined = bundles[0].instances[slot].token.clone();
            for b in &bundles[1..] {
                combined.intersect_with(&b.instances[slot].token);
            }
            let excess = combined.count() % dealer.public(config.parties).m as usize;
            let mut ones: Vec<usize> = combined.ones().collect();
            ones.shuffle(&mut rng);
            let token = &mut bundles[holder(malicious[0])].instances[slot].token;
            for &e in &ones[..excess] {
                token.remove(e);
            }
            for &party in &malicious[1..] {
                let token = &mut bundles[holder(party)].instances[slot].token;
                let bit = rng.gen_range(0..token.len());
                token.toggle(bit);
            }
        }
        mode => {
            for &party in &malicious {
                let j = inst.position(party).expect("malicious parties hold chain positions");
                let d = match mode {
                    CorruptionMode::EncodingReplacement => {
                        let s2 = sample_invertible(lwe.n, lwe.p, &mut rng);
                        let e = sample_error(lwe, &mut rng);
                        encode_link(&inst.chain.trapdoors[j], &inst.chain.trapdoors[j + 1].a, &s2, &e, &mut rng)?
                    }
                    CorruptionMode::GaussianReplacement => {
                        let g = DiscreteGaussian::new(lwe.sigma());
                        Mat::from_fn(lwe.w, lwe.w, |_, _| g.sample(&mut rng))
                    }
                    _ => {
                        let mut d = bundles[holder(party)].instances[slot].d.clone();
                        let (r, c) = (rng.gen_range(0..lwe.w), rng.gen_range(0..lwe.w));
                        let bit = rng.gen_range(0..lwe.d());
                        d.set(r, c, d.get(r, c) ^ (1 << bit));
                        d
                    }
                };
                bundles[holder(party)].instances[slot].d = d.reduced(lwe.q);
            }
        }
    }

    let outcome = match reconstruct(&bundles) {
        Ok(got) if got == *k => Outcome::Recovered { k: got.value() },
        Ok(got) => Outcome::WrongSecret { k: got.value() },
        Err(VssError::Unauthorized) => Outcome::Unauthorized,
        Err(e) if e.is_protocol_failure() => Outcome::Failed { reason: e.to_string() },
        Err(e) => return Err(e),
    };
    let verdicts = match verify_shares(&bundles, k) {
        Ok(v) => Some(v.verdicts),
        Err(e) if e.is_protocol_failure() => None,
        Err(e) => return Err(e),
    };
    let (mut checks, mut accepted, mut honest_flagged) = (0, 0, 0);
    if let Some(v) = &verdicts {
        for (&party, &ok) in v {
            if malicious.contains(&party) {
                if inst.position(party).is_some() {
                    checks += 1;
                    accepted += usize::from(ok);
                }
            } else if !ok {
                honest_flagged += 1;
            }
        }
    }
    let clean =
        outcome == Outcome::Recovered { k: k.value() } && verdicts.as_ref().is_some_and(|v| v.values().all(|&x| x));
    Ok(TrialRecord {
        trial,
        instance: inst.instance,
        coalition,
        malicious,
        outcome,
        verdicts,
        detected: !clean,
        checks,
        checks_accepted: accepted,
        honest_flagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_interval() {
        let (lo, hi) = wilson(50, 100);
        assert!((lo - 0.4038).abs() < 1e-3 && (hi - 0.5962).abs() < 1e-3);
        let (lo, hi) = wilson(0, 10);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.2775).abs() < 1e-3);
    }

    #[test]
    fn config_checks() {
        assert!(SimulationConfig::desk(0, CorruptionMode::EncodingReplacement, 1, 0).validate().is_ok());
        assert!(SimulationConfig::desk(2, CorruptionMode::EncodingReplacement, 1, 0).validate().is_ok());
        assert!(SimulationConfig::desk(3, CorruptionMode::EncodingReplacement, 1, 0).validate().is_err());
        assert!(SimulationConfig::desk(1, CorruptionMode::TokenTampering, 1, 0).validate().is_ok());
        assert!(SimulationConfig::desk(2, CorruptionMode::TokenTampering, 1, 0).validate().is_err());
        assert!(SimulationConfig::desk(0, CorruptionMode::TokenTampering, 1, 0).validate().is_err());
    }
}
