//! Deterministic generator for milling-machine condition-monitoring data in
//! the exact CSV layout the loader expects.
//!
//! The generator reproduces the structure the toolkit's statistics and
//! models key on: air and process temperature move together (r ≈ 0.88),
//! rotational speed falls with torque along a constant-power curve
//! (r ≈ −0.88), and the failure flags follow mechanistic rules — heat
//! dissipation needs a small air/process gap at low speed, power failures
//! trip outside a torque·speed band, overstrain trips on torque·wear above
//! a per-type limit, tool-wear failures happen late in the wear window, and
//! random failures ignore everything. The machine-failure label is the OR
//! of the four mechanistic flags; flag rates are tuned so the label's
//! correlations with HDF/PWF/OSF and torque land where the toolkit's
//! diagnostics expect them.
//!
//! All draws come from one seeded stream with a fixed number of draws per
//! row, so output is byte-identical for a given (rows, seed) pair.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SynthConfig {
    pub rows: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> SynthConfig {
        SynthConfig { rows: 10_000, seed: 20 }
    }
}

// Feature distributions.
const AIR_MEAN_K: f64 = 300.0;
const AIR_SD_K: f64 = 0.3;
const PROC_MEAN_K: f64 = 310.0;
const PROC_SD_K: f64 = 2.0;
/// Correlation between air and process temperature before rounding.
const AIR_PROC_R: f64 = 0.883;
const TORQUE_MEAN_NM: f64 = 40.0;
const TORQUE_SD_NM: f64 = 10.0;
const TORQUE_FLOOR_NM: f64 = 1.0;
/// Speed rides a constant-power curve: rpm ≈ RPM_SCALE / (torque + RPM_SHIFT).
const RPM_SCALE: f64 = 149_186.0;
const RPM_SHIFT: f64 = 57.0;
const RPM_NOISE_SD: f64 = 85.0;
const WEAR_MAX_MIN: u32 = 250;

// Product type mix: low / medium / high duty.
const TYPE_L_SHARE: f64 = 0.60;
const TYPE_M_SHARE: f64 = 0.30;

// Failure rules, applied to the recorded (rounded) values.
const HDF_MAX_DELTA_T_K: f64 = 6.65;
const HDF_MAX_RPM: f64 = 1548.0;
const PWF_LOW_W: f64 = 2500.0;
const PWF_HIGH_W: f64 = 8640.0;
const OSF_LIMIT_L: f64 = 12_650.0;
const OSF_LIMIT_M: f64 = 13_650.0;
const OSF_LIMIT_H: f64 = 14_650.0;
const TWF_WEAR_MIN: u32 = 200;
const TWF_WEAR_MAX: u32 = 240;
const TWF_PROB: f64 = 0.030;
const RNF_PROB: f64 = 0.0019;

/// Angular speed per rpm: 2π/60 rad·s⁻¹, so power [W] = torque · rpm · this.
const RAD_PER_RPM: f64 = std::f64::consts::PI / 30.0;

fn round1(v: f64) -> f64 {
    (v * 10.0).round() / 10.0
}

/// Generate the full CSV, header included, as a string.
pub fn generate_csv(config: &SynthConfig) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let normal = StandardNormal;
    let mut out = String::with_capacity(config.rows * 64 + 128);
    out.push_str(
        "UDI,Product ID,Type,Air temperature [K],Process temperature [K],\
         Rotational speed [rpm],Torque [Nm],Tool wear [min],Machine failure,\
         TWF,HDF,PWF,OSF,RNF\n",
    );
    let cross = (1.0 - AIR_PROC_R * AIR_PROC_R).sqrt();
    for i in 0..config.rows {
        // Fixed draw count per row keeps the stream aligned regardless of
        // which branches fire.
        let type_u: f64 = rng.gen();
        let air_z: f64 = normal.sample(&mut rng);
        let proc_z: f64 = normal.sample(&mut rng);
        let torque_z: f64 = normal.sample(&mut rng);
        let rpm_z: f64 = normal.sample(&mut rng);
        let wear: u32 = rng.gen_range(0..=WEAR_MAX_MIN);
        let twf_u: f64 = rng.gen();
        let rnf_u: f64 = rng.gen();

        let (ty, osf_limit) = if type_u < TYPE_L_SHARE {
            ('L', OSF_LIMIT_L)
        } else if type_u < TYPE_L_SHARE + TYPE_M_SHARE {
            ('M', OSF_LIMIT_M)
        } else {
            ('H', OSF_LIMIT_H)
        };

        let air = round1(AIR_MEAN_K + AIR_SD_K * air_z);
        let process = round1(PROC_MEAN_K + PROC_SD_K * (AIR_PROC_R * air_z + cross * proc_z));
        let torque = round1((TORQUE_MEAN_NM + TORQUE_SD_NM * torque_z).max(TORQUE_FLOOR_NM));
        let rpm = (RPM_SCALE / (torque + RPM_SHIFT) + RPM_NOISE_SD * rpm_z).round();

        let delta_t = process - air;
        let power_w = torque * rpm * RAD_PER_RPM;
        let twf = (TWF_WEAR_MIN..=TWF_WEAR_MAX).contains(&wear) && twf_u < TWF_PROB;
        let hdf = delta_t < HDF_MAX_DELTA_T_K && rpm < HDF_MAX_RPM;
        let pwf = power_w < PWF_LOW_W || power_w > PWF_HIGH_W;
        let osf = torque * wear as f64 > osf_limit;
        let rnf = rnf_u < RNF_PROB;
        let failure = twf || hdf || pwf || osf;

        writeln!(
            out,
            "{},{}{},{},{:.1},{:.1},{},{:.1},{},{},{},{},{},{},{}",
            i + 1,
            ty,
            10_000 + i,
            ty,
            air,
            process,
            rpm as i64,
            torque,
            wear,
            failure as u8,
            twf as u8,
            hdf as u8,
            pwf as u8,
            osf as u8,
            rnf as u8,
        )
        .expect("writing to a String cannot fail");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{self, TargetMode};
    use crate::stats;

    fn load(rows: usize, seed: u64) -> dataset::Dataset {
        let csv = generate_csv(&SynthConfig { rows, seed });
        let table = dataset::load_ai4i_reader(csv.as_bytes()).unwrap();
        dataset::encode_features(&table).unwrap()
    }

    #[test]
    fn output_is_deterministic_and_loads() {
        let cfg = SynthConfig { rows: 500, seed: 20 };
        let a = generate_csv(&cfg);
        let b = generate_csv(&cfg);
        assert_eq!(a, b);
        let c = generate_csv(&SynthConfig { rows: 500, seed: 21 });
        assert_ne!(a, c);
        let d = dataset::encode_features(&dataset::load_ai4i_reader(a.as_bytes()).unwrap()).unwrap();
        assert_eq!(d.features.n_rows(), 500);
        assert_eq!(d.feature_names.len(), 6);
    }

    #[test]
    fn correlation_structure_lands_in_band() {
        let d = load(10_000, 20);
        let corr = stats::pearson_matrix(&d, &stats::default_corr_columns()).unwrap();
        let r = |a: &str, b: &str| corr.get(a, b).unwrap();

        let air_proc = r("Air temperature [K]", "Process temperature [K]");
        assert!((air_proc - 0.88).abs() <= 0.015, "air/process r = {air_proc}");

        let speed_torque = r("Rotational speed [rpm]", "Torque [Nm]");
        assert!((speed_torque + 0.88).abs() <= 0.015, "speed/torque r = {speed_torque}");

        let mf_hdf = r("Machine failure", "HDF");
        assert!((mf_hdf - 0.58).abs() <= 0.015, "failure/HDF r = {mf_hdf}");

        let mf_pwf = r("Machine failure", "PWF");
        assert!((mf_pwf - 0.52).abs() <= 0.015, "failure/PWF r = {mf_pwf}");

        let mf_osf = r("Machine failure", "OSF");
        assert!((mf_osf - 0.53).abs() <= 0.015, "failure/OSF r = {mf_osf}");

        let mf_torque = r("Machine failure", "Torque [Nm]");
        assert!((mf_torque - 0.19).abs() <= 0.015, "failure/torque r = {mf_torque}");
    }

    #[test]
    fn flag_counts_are_plausible() {
        let d = load(10_000, 20);
        let counts: Vec<usize> = (0..5)
            .map(|f| d.flags.iter().filter(|row| row[f] == 1).count())
            .collect();
        let failures = d.machine_failure.iter().filter(|&&v| v == 1).count();
        // TWF, HDF, PWF, OSF, RNF.
        assert!((30..=60).contains(&counts[0]), "TWF = {}", counts[0]);
        assert!((100..=135).contains(&counts[1]), "HDF = {}", counts[1]);
        assert!((80..=110).contains(&counts[2]), "PWF = {}", counts[2]);
        assert!((85..=115).contains(&counts[3]), "OSF = {}", counts[3]);
        assert!((8..=35).contains(&counts[4]), "RNF = {}", counts[4]);
        assert!((300..=380).contains(&failures), "failures = {failures}");
    }

    #[test]
    fn failure_label_is_or_of_mechanistic_flags() {
        let d = load(3_000, 7);
        for (row, flags) in d.flags.iter().enumerate() {
            let mechanistic = flags[0] | flags[1] | flags[2] | flags[3];
            assert_eq!(
                d.machine_failure[row], mechanistic,
                "row {row}: label must be the OR of TWF/HDF/PWF/OSF"
            );
        }
    }

    #[test]
    fn severity_mode_has_signal() {
        let d = load(10_000, 20);
        let y = dataset::derive_target(&d, TargetMode::Severity);
        let y = match y {
            dataset::Target::Vector(v) => v,
            _ => unreachable!("severity is a vector target"),
        };
        let positives = y.iter().filter(|&&v| v > 0.0).count();
        assert!(positives > 250, "need enough nonzero-severity rows, got {positives}");
        let max = y.iter().copied().fold(0.0f64, f64::max);
        assert!(max >= 2.0, "some rows should stack multiple fault modes");
    }

    #[ignore = "calibration aid: prints realized statistics"]
    #[test]
    fn print_realized_statistics() {
        let d = load(10_000, 20);
        let counts: Vec<usize> = (0..5)
            .map(|f| d.flags.iter().filter(|row| row[f] == 1).count())
            .collect();
        let failures = d.machine_failure.iter().filter(|&&v| v == 1).count();
        println!("TWF={} HDF={} PWF={} OSF={} RNF={} MF={failures}", counts[0], counts[1], counts[2], counts[3], counts[4]);
        let corr = stats::pearson_matrix(&d, &stats::default_corr_columns()).unwrap();
        for (a, b) in [
            ("Air temperature [K]", "Process temperature [K]"),
            ("Rotational speed [rpm]", "Torque [Nm]"),
            ("Machine failure", "HDF"),
            ("Machine failure", "PWF"),
            ("Machine failure", "OSF"),
            ("Machine failure", "TWF"),
            ("Machine failure", "RNF"),
            ("Machine failure", "Torque [Nm]"),
            ("Machine failure", "Rotational speed [rpm]"),
            ("Machine failure", "Process temperature [K]"),
            ("Machine failure", "Tool wear [min]"),
        ] {
            println!("r({a}, {b}) = {:+.4}", corr.get(a, b).unwrap());
        }
    }
}
