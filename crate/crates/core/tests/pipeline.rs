//! End-to-end runs of the measurement chain: source spectra through the
//! demultiplexer filters into the interference kernel, polarization elements
//! accumulating delays on the pair state, Poisson counting, and the fitted
//! summaries an operator would read off the bench.

use std::f64::consts::PI;

use approx::assert_abs_diff_eq;
use biphoton_core::bell::{run_bell, FRINGE_OMEGA_PER_HWP_DEG};
use biphoton_core::detection::{expected_rates, raw_and_net_visibility, simulate_counts};
use biphoton_core::interference::{
    coincidence_probability, delay_scan, delay_scan_curve, net_walkoff_ps,
    pmf_length_for_compensation,
};
use biphoton_core::polarization::apply_element;
use biphoton_core::spectra::{make_dwdm_filter, make_source_spectrum};
use biphoton_core::streams::stream_rng;
use biphoton_core::{
    BandRole, BellSettings, BiphotonState, CountingConfig, DelayScanRange, DetectorParams,
    FilterSpec, FitModel, FrequencyGrid, HomConfig, KernelProfiles, OpticalElement, Polarization,
};

/// Degeneracy wavelength of the source, nm.
const DEGENERACY_NM: f64 = 1540.2;
/// Intensity FWHM of the emission line, nm.
const SOURCE_FWHM_NM: f64 = 0.85;
/// H-vs-V group delay picked up inside the source waveguide, ps.
const WAVEGUIDE_WALKOFF_PS: f64 = 4.40;
/// Differential group delay of the compensation fiber, ps per meter.
const FIBER_DGD_PS_PER_M: f64 = 1.38;
/// Installed length of that fiber, m.
const FIBER_LENGTH_M: f64 = 3.2;

/// The filtered spectra of the bench: one emission line behind the two
/// demultiplexer channels adjacent to degeneracy.
fn bench_profiles() -> KernelProfiles {
    let grid = FrequencyGrid::around_wavelength_nm(DEGENERACY_NM, 6.0, 4096).unwrap();
    let source_h =
        make_source_spectrum(Polarization::H, DEGENERACY_NM, SOURCE_FWHM_NM, &grid).unwrap();
    let source_v =
        make_source_spectrum(Polarization::V, DEGENERACY_NM, SOURCE_FWHM_NM, &grid).unwrap();
    let plus = make_dwdm_filter(&FilterSpec::itu(46, BandRole::HighWavelength), &grid).unwrap();
    let minus = make_dwdm_filter(&FilterSpec::itu(47, BandRole::LowWavelength), &grid).unwrap();
    KernelProfiles::from_source_and_filters(&source_h, &source_v, &plus, &minus).unwrap()
}

/// The pair state leaving the source waveguide: maximally entangled, with
/// the waveguide walk-off already on the clock.
fn uncompensated_state() -> BiphotonState {
    apply_element(
        &BiphotonState::psi_plus(),
        &OpticalElement::BirefringentDelay {
            delta_ps: WAVEGUIDE_WALKOFF_PS,
        },
    )
    .unwrap()
}

/// The same state after the crossed-axes compensation fiber.
fn compensated_state() -> BiphotonState {
    apply_element(
        &uncompensated_state(),
        &OpticalElement::BirefringentDelay {
            delta_ps: -FIBER_DGD_PS_PER_M * FIBER_LENGTH_M,
        },
    )
    .unwrap()
}

fn ideal_config(state: BiphotonState) -> HomConfig {
    HomConfig {
        state,
        profiles: bench_profiles(),
        range: DelayScanRange::default(),
        device_visibility: 1.0,
        counting: None,
    }
}

/// Free-running + gated APD pair counting the plain interference dip.
fn dip_counting() -> CountingConfig {
    CountingConfig {
        pair_rate: 8.0e4,
        link_transmission: [0.5, 0.5],
        detectors: [DetectorParams::free_running_apd(), DetectorParams::gated_apd()],
        coincidence_window_ns: 20.0,
        integration_time_s: 1.0,
    }
}

/// The phase-shifter arrangement: pump turned up, one arm heavily lossy.
fn phase_arm_counting() -> CountingConfig {
    CountingConfig {
        pair_rate: 8.0e5,
        link_transmission: [0.5, 0.05],
        detectors: [DetectorParams::free_running_apd(), DetectorParams::gated_apd()],
        coincidence_window_ns: 20.0,
        // The peak top is the noisiest point on any scan; integrate longer.
        integration_time_s: 4.0,
    }
}

/// Two free-running APDs watching the polarization-analysis fringes.
fn bell_counting() -> CountingConfig {
    CountingConfig {
        pair_rate: 2.2e5,
        link_transmission: [0.5, 0.5],
        detectors: [
            DetectorParams::free_running_apd(),
            DetectorParams::free_running_apd(),
        ],
        coincidence_window_ns: 20.0,
        integration_time_s: 10.0,
    }
}

/// The headline alignment story: straight out of the waveguide the dip sits
/// at minus the walk-off; splicing in the compensation fiber moves it back
/// to the origin, and the interference stays complete either way.
#[test]
fn compensation_fiber_recenters_the_interference_dip() {
    let uncompensated = delay_scan(&ideal_config(uncompensated_state()), None)
        .unwrap()
        .fit
        .unwrap();
    assert!(!uncompensated.flat);
    assert_abs_diff_eq!(uncompensated.center, -WAVEGUIDE_WALKOFF_PS, epsilon = 0.05);
    assert_abs_diff_eq!(uncompensated.visibility, 1.0, epsilon = 1e-3);

    let compensated = delay_scan(&ideal_config(compensated_state()), None)
        .unwrap()
        .fit
        .unwrap();
    let residual = net_walkoff_ps(WAVEGUIDE_WALKOFF_PS, FIBER_DGD_PS_PER_M, FIBER_LENGTH_M);
    assert!(compensated.center.abs() < 0.05);
    assert_abs_diff_eq!(compensated.center, -residual, epsilon = 0.01);
    assert_abs_diff_eq!(compensated.visibility, 1.0, epsilon = 1e-3);

    // The installed 3.2 m is the catalogue cut of the exact requirement.
    let exact =
        pmf_length_for_compensation(WAVEGUIDE_WALKOFF_PS, FIBER_DGD_PS_PER_M).unwrap();
    assert_abs_diff_eq!(exact, FIBER_LENGTH_M, epsilon = 0.02);
}

/// Turning the phase shifter walks the coincidence probability at the
/// feature center monotonically from a complete dip to a complete peak,
/// and the endpoint scans fit as such.
#[test]
fn phase_shifter_walks_the_dip_into_a_peak() {
    let base = compensated_state();
    let probe_delay = -base.walkoff_ps();
    let mut probabilities = Vec::new();
    for k in 0..=8 {
        let phase = PI * k as f64 / 8.0;
        let state =
            apply_element(&base, &OpticalElement::SbPhase { phase_rad: phase }).unwrap();
        let p = coincidence_probability(&ideal_config(state), probe_delay).unwrap();
        probabilities.push(p);
    }
    assert_abs_diff_eq!(probabilities[0], 0.0, epsilon = 1e-9);
    assert_abs_diff_eq!(probabilities[4], 0.5, epsilon = 1e-9);
    assert_abs_diff_eq!(probabilities[8], 1.0, epsilon = 1e-9);
    assert!(
        probabilities.windows(2).all(|w| w[1] > w[0]),
        "center probability should rise monotonically with the phase: {probabilities:?}"
    );

    // Endpoint scans: same feature center, opposite sense, full contrast.
    let dip = delay_scan(&ideal_config(base.clone()), None).unwrap().fit.unwrap();
    let flipped =
        apply_element(&base, &OpticalElement::SbPhase { phase_rad: PI }).unwrap();
    let peak = delay_scan(&ideal_config(flipped), None).unwrap().fit.unwrap();
    assert_abs_diff_eq!(dip.visibility, 1.0, epsilon = 1e-3);
    assert_abs_diff_eq!(peak.visibility, 1.0, epsilon = 1e-3);
    assert_abs_diff_eq!(dip.center, peak.center, epsilon = 0.01);
}

/// Counted scans land where the bench logbook says they land: the plain
/// dip in the low-90s raw, the lossy phase-shifter arrangement in the
/// mid-80s raw, recovering to its device contrast after subtracting the
/// accidental floor.
#[test]
fn counted_scans_land_in_the_recorded_visibility_bands() {
    let mut dip_config = ideal_config(uncompensated_state());
    dip_config.device_visibility = 0.947;
    dip_config.counting = Some(dip_counting());
    let curve = delay_scan_curve(&dip_config).unwrap();
    for seed in [1, 2, 3] {
        let raw = curve.sample(seed).unwrap().fit.unwrap().visibility;
        assert!(
            (0.89..=0.99).contains(&raw),
            "seed {seed}: raw dip visibility {raw} outside the recorded band"
        );
    }

    let mut phase_config = ideal_config(compensated_state());
    phase_config.device_visibility = 0.94;
    phase_config.counting = Some(phase_arm_counting());
    let accidentals = expected_rates(&phase_arm_counting(), 0.0)
        .unwrap()
        .accidental_coincidences;
    let curve = delay_scan_curve(&phase_config).unwrap();
    let scan = curve.sample(7).unwrap();
    let baseline = curve.sampled_baseline_rate().unwrap().unwrap();
    let pair =
        raw_and_net_visibility(&scan, FitModel::Dip { baseline }, accidentals).unwrap();
    assert!(
        (0.81..=0.91).contains(&pair.raw),
        "raw visibility {} outside the recorded band",
        pair.raw
    );
    assert!(
        (0.88..=1.0).contains(&pair.net),
        "net visibility {} outside the recorded band",
        pair.net
    );
    assert!(pair.net > pair.raw);
    assert!(!pair.clamped);
}

/// A full counted polarization-analysis run: four fringes, the recorded
/// raw/net contrast levels, and a many-sigma inequality violation.
#[test]
fn bell_run_reproduces_the_recorded_correlations() {
    let settings = BellSettings {
        visibility_factor: 0.993,
        counting: Some(bell_counting()),
        ..BellSettings::ideal(BiphotonState::psi_plus())
    };
    let run = run_bell(&settings, Some(5)).unwrap();

    let accidentals = expected_rates(&bell_counting(), 0.0)
        .unwrap()
        .accidental_coincidences;
    let model = FitModel::Fringe {
        omega: FRINGE_OMEGA_PER_HWP_DEG,
    };
    let mut raws = Vec::new();
    for fringe in &run.fringes {
        let pair = raw_and_net_visibility(fringe, model, accidentals).unwrap();
        assert!(
            (0.95..=0.995).contains(&pair.raw),
            "raw fringe visibility {} far from the recorded level",
            pair.raw
        );
        assert!(
            (0.98..=1.0).contains(&pair.net),
            "net fringe visibility {} far from the recorded level",
            pair.net
        );
        raws.push(pair.raw);
    }
    let mean_raw = raws.iter().sum::<f64>() / raws.len() as f64;
    assert_abs_diff_eq!(mean_raw, 0.9742, epsilon = 0.01);

    // The fringe-fitted CHSH carries the apparatus contrast; the state-only
    // reference is the ideal bound.
    assert!(run.chsh_fringes.s > 2.7);
    assert!(run.chsh_fringes.violation_significance() > 50.0);
    assert_abs_diff_eq!(run.chsh_state, 2.0 * 2.0_f64.sqrt(), epsilon = 1e-9);
}

/// The same seed gives bit-identical scans no matter how many workers the
/// surrounding thread pool offers: the τ grid is evaluated in parallel, and
/// every point draws from its own counting stream.
#[test]
fn sampled_scans_are_identical_across_thread_pools() {
    let mut config = ideal_config(uncompensated_state());
    config.device_visibility = 0.947;
    config.counting = Some(dip_counting());

    let run_with = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            let ideal = delay_scan(&config, None).unwrap();
            let sampled = delay_scan(&config, Some(11)).unwrap();
            (ideal, sampled)
        })
    };
    let (ideal_one, sampled_one) = run_with(1);
    let (ideal_eight, sampled_eight) = run_with(8);
    assert_eq!(ideal_one, ideal_eight);
    assert_eq!(sampled_one, sampled_eight);
}

/// Simulated counts are honest Poisson draws: the grand mean over 10⁴ seeds
/// sits within three standard errors of the analytic rate, and the batch-mean
/// error shrinks like 1/√N across two decades of batch size.
#[test]
fn monte_carlo_means_track_the_analytic_rate_like_root_n() {
    // The fringe maximum of the polarization-analysis arrangement is the
    // bench's rate constant; probe the counting chain right there.
    let counting = bell_counting();
    let expected = expected_rates(&counting, 0.5).unwrap().total_coincidences();

    let batches = 20;
    let sizes = [100_usize, 1_000, 10_000];
    let mut draws = Vec::with_capacity(batches * sizes[2]);
    for seed in 0..(batches * sizes[2]) as u64 {
        let mut rng = stream_rng(999, seed);
        let records = simulate_counts(&counting, 0.5, &mut rng).unwrap();
        let coincidences = records
            .iter()
            .find(|r| r.category == "coincidences")
            .unwrap()
            .count;
        draws.push(coincidences as f64 / counting.integration_time_s);
    }

    let first_n = &draws[..sizes[2]];
    let grand_mean = first_n.iter().sum::<f64>() / first_n.len() as f64;
    let standard_error = (expected / sizes[2] as f64).sqrt();
    assert!(
        (grand_mean - expected).abs() < 3.0 * standard_error,
        "mean over 10⁴ seeds {grand_mean} vs analytic {expected} ± {standard_error}"
    );

    // RMS error of disjoint batch means, 20 batches per size.
    let rms_at = |n: usize| -> f64 {
        let mut sq = 0.0;
        for b in 0..batches {
            let chunk = &draws[b * n..(b + 1) * n];
            let mean = chunk.iter().sum::<f64>() / n as f64;
            sq += (mean - expected).powi(2);
        }
        (sq / batches as f64).sqrt()
    };
    let xs: Vec<f64> = sizes.iter().map(|&n| (n as f64).log10()).collect();
    let ys: Vec<f64> = sizes.iter().map(|&n| rms_at(n).log10()).collect();
    let xm = xs.iter().sum::<f64>() / 3.0;
    let ym = ys.iter().sum::<f64>() / 3.0;
    let slope = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - xm) * (y - ym))
        .sum::<f64>()
        / xs.iter().map(|x| (x - xm).powi(2)).sum::<f64>();
    assert!(
        (slope + 0.5).abs() < 0.1,
        "batch-mean error scales as N^{slope}, expected N^-0.5"
    );
}
