use crate::model::{ChannelPlan, Spectrum};
use crate::units::{Cnr, PowerDbm, SignalLine};

use super::EngineError;

/// dBm to dBµV across 75 Ω: `20 log10(sqrt(1 mW * 75 Ω) / 1 µV)`.
pub const DBM_TO_DBUV_75_OHM: f64 = 108.750_612_633_917;

/// Per-channel level when a composite power rating is shared by `n_channels`
/// carriers.
///
/// # Panics
/// If `n_channels` is zero.
pub fn power_to_level(p: PowerDbm, n_channels: u32) -> f64 {
    assert!(n_channels >= 1, "channel count must be at least 1");
    p.0 + DBM_TO_DBUV_75_OHM - 10.0 * f64::from(n_channels).log10()
}

/// C/N at the end of a chain of `n_amps` identical amplifiers, each driven to
/// `u_out` dBµV with gain `k` and noise figure `f`, fed by a signal of C/N
/// `cn_in`.
///
/// Amplifier noise is referenced to 0 dBµV, so a single stage contributes
/// `u_out - k - f` dB and `n_amps` stages `10 log10(n_amps)` dB less.
///
/// # Panics
/// If `n_amps` is zero.
pub fn cascade_cnr(cn_in: Cnr, n_amps: u32, u_out: f64, k: f64, f: f64) -> Cnr {
    assert!(n_amps >= 1, "amplifier count must be at least 1");
    let stages = u_out - k - f - 10.0 * f64::from(n_amps).log10();
    Cnr::from_noise_ratio(cn_in.noise_ratio() + Cnr::Db(stages).noise_ratio())
}

/// Noise contribution of one active stage operating at `u_out`.
pub fn stage_cnr(u_out: f64, k: f64, f: f64) -> Cnr {
    Cnr::Db(u_out - k - f)
}

/// Power sum of independent noise contributions. Ideal entries add nothing.
pub fn combine_cnr(contributions: &[Cnr]) -> Cnr {
    Cnr::from_noise_ratio(contributions.iter().map(|c| c.noise_ratio()).sum())
}

/// Flat source spectrum for a headend rated `p` shared by the channels of
/// `plan` on `line`. Dropping unwanted transponders from the plan raises the
/// allowed per-channel level.
pub fn source_from_power(p: PowerDbm, plan: &ChannelPlan, line: SignalLine) -> Result<Spectrum, EngineError> {
    let n = plan.count(line);
    if n == 0 {
        return Err(EngineError::EmptyPlan(line));
    }
    Ok(Spectrum::flat(line.band(), power_to_level(p, n as u32)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{Band, Frequency};

    /// 1 mW into 75 Ω expressed in dB relative to 1 µV.
    fn oracle_dbm_to_dbuv() -> f64 {
        let volts = (1e-3_f64 * 75.0).sqrt();
        20.0 * (volts / 1e-6).log10()
    }

    #[test]
    fn conversion_constant_matches_physics() {
        assert!((DBM_TO_DBUV_75_OHM - oracle_dbm_to_dbuv()).abs() < 1e-9);
        assert!((power_to_level(PowerDbm(0.0), 1) - 108.75).abs() < 0.001);
    }

    #[test]
    fn per_channel_derating_examples() {
        let two = power_to_level(PowerDbm(0.0), 2);
        let thirty = power_to_level(PowerDbm(0.0), 30);
        assert!((two - 105.74).abs() < 0.005, "{two}");
        assert!((thirty - 93.98).abs() < 0.005, "{thirty}");
        assert!((two - 105.8).abs() <= 0.1);
        assert!((thirty - 94.0).abs() <= 0.1);
    }

    #[test]
    fn cascade_example_ten_amplifiers() {
        let cn = cascade_cnr(Cnr::Db(16.0), 10, 80.0, 36.0, 8.0).db().unwrap();
        assert!((cn - 15.59).abs() < 0.005, "{cn}");
        assert!((cn - 15.6).abs() <= 0.05);
    }

    #[test]
    fn cascade_with_negligible_amplifier_noise() {
        let cn = cascade_cnr(Cnr::Db(16.0), 1, 200.0, 72.0, 8.0).db().unwrap();
        assert!((cn - 16.0).abs() < 1e-6);
    }

    #[test]
    fn cascade_with_ideal_input() {
        let cn = cascade_cnr(Cnr::Unconstrained, 1, 80.0, 36.0, 8.0).db().unwrap();
        assert!((cn - 36.0).abs() < 1e-9);
    }

    #[test]
    fn combine_examples() {
        assert_eq!(combine_cnr(&[Cnr::Db(20.0)]).db().unwrap(), 20.0);
        let doubled = combine_cnr(&[Cnr::Db(30.0), Cnr::Db(30.0)]).db().unwrap();
        assert!((doubled - (30.0 - 10.0 * 2f64.log10())).abs() < 1e-12);
        assert!((30.0 - doubled - 3.0103).abs() < 1e-4);
        // ten stages at 80 - 36 - 8 = 36 dB each sum to 26 dB
        let split = combine_cnr(&[Cnr::Db(16.0), Cnr::Db(26.0)]).db().unwrap();
        let chained = cascade_cnr(Cnr::Db(16.0), 10, 80.0, 36.0, 8.0).db().unwrap();
        assert!((split - chained).abs() < 1e-12);
        assert_eq!(combine_cnr(&[Cnr::Unconstrained, Cnr::Unconstrained]), Cnr::Unconstrained);
        assert_eq!(combine_cnr(&[Cnr::Unconstrained, Cnr::Db(12.0)]).db().unwrap(), 12.0);
    }

    #[test]
    fn source_level_rises_when_transponders_are_dropped() {
        let full = ChannelPlan::evenly_spaced(SignalLine::Vl, 980.0, 30.0, 30, 27.0);
        let wanted = full.select(|c| c.center_mhz.value() <= 1010.0);
        assert_eq!(wanted.count(SignalLine::Vl), 2);
        let f = Frequency::mhz(1500.0).unwrap();
        let before = source_from_power(PowerDbm(0.0), &full, SignalLine::Vl).unwrap().level_at(f).unwrap();
        let after = source_from_power(PowerDbm(0.0), &wanted, SignalLine::Vl).unwrap().level_at(f).unwrap();
        assert!((before - 93.98).abs() < 0.005);
        assert!((after - 105.74).abs() < 0.005);
        assert!((after - before - 10.0 * 15f64.log10()).abs() < 1e-9);

        let one = ChannelPlan::evenly_spaced(SignalLine::Terr, 474.0, 8.0, 1, 8.0);
        let lvl = source_from_power(PowerDbm(0.0), &one, SignalLine::Terr).unwrap();
        assert_eq!(lvl, Spectrum::flat(Band::Terrestrial, DBM_TO_DBUV_75_OHM));
        assert!(matches!(
            source_from_power(PowerDbm(0.0), &one, SignalLine::Hh),
            Err(EngineError::EmptyPlan(SignalLine::Hh))
        ));
    }
}
