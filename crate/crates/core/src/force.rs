//! Internal compression force and tissue normal force along a needle path.
//!
//! The needle is treated as a Cosserat string carrying compression `n(s)`.
//! With kinetic friction `C + mu * f_t` and `f_t = kappa * n`, the force obeys
//! `dn/ds = -C - mu * kappa * n`, integrated from the tip condition
//! `n(L) = F_p` back to the base. For piecewise-constant coefficients each
//! segment has a closed form; [`internal_force_numeric`] integrates the same
//! equation with RK4 and serves as an independent cross-check.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{ArcSegment, NeedlePath};

/// Below this capstan exponent the linear (friction-free bending) solution is used.
const LINEAR_EXPONENT: f64 = 1e-12;

/// Largest cumulative capstan exponent before the force is declared saturated.
pub const SATURATION_EXPONENT: f64 = 700.0;

/// Friction constant fitted to phantom insertion data (N/m).
pub const DEFAULT_C_FRICTION: f64 = 83.75;
/// Kinetic friction coefficient.
pub const DEFAULT_MU: f64 = 0.32;
/// Tip piercing force (N).
pub const DEFAULT_PIERCING_FORCE: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTissue", into = "RawTissue")]
pub struct TissueParams {
    c_friction: f64,
    mu: f64,
    piercing_force: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTissue {
    c: f64,
    mu: f64,
    fp: f64,
}

impl TryFrom<RawTissue> for TissueParams {
    type Error = Error;
    fn try_from(raw: RawTissue) -> Result<Self> {
        TissueParams::new(raw.c, raw.mu, raw.fp)
    }
}

impl From<TissueParams> for RawTissue {
    fn from(p: TissueParams) -> Self {
        RawTissue {
            c: p.c_friction,
            mu: p.mu,
            fp: p.piercing_force,
        }
    }
}

impl Default for TissueParams {
    fn default() -> Self {
        Self {
            c_friction: DEFAULT_C_FRICTION,
            mu: DEFAULT_MU,
            piercing_force: DEFAULT_PIERCING_FORCE,
        }
    }
}

impl TissueParams {
    pub fn new(c_friction: f64, mu: f64, piercing_force: f64) -> Result<Self> {
        if !(c_friction.is_finite() && mu.is_finite() && piercing_force.is_finite()) {
            return Err(Error::InvalidTissue("all parameters must be finite".into()));
        }
        if c_friction < 0.0 {
            return Err(Error::InvalidTissue(format!("C must be >= 0, got {c_friction}")));
        }
        if mu < 0.0 {
            return Err(Error::InvalidTissue(format!("mu must be >= 0, got {mu}")));
        }
        if piercing_force <= 0.0 {
            return Err(Error::InvalidTissue(format!(
                "piercing force must be > 0, got {piercing_force}"
            )));
        }
        Ok(Self {
            c_friction,
            mu,
            piercing_force,
        })
    }

    pub fn c_friction(&self) -> f64 {
        self.c_friction
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn piercing_force(&self) -> f64 {
        self.piercing_force
    }
}

/// Forces at the two ends of one constant-curvature segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentForceState {
    pub n_distal: f64,
    pub n_proximal: f64,
    /// Largest tissue normal force on the segment, reached at its proximal end.
    pub f_t_max: f64,
}

/// Internal force `distance` meters proximal of a point carrying `n_distal`.
fn closed_form(n_distal: f64, c: f64, mu: f64, kappa: f64, distance: f64) -> (f64, f64) {
    let exponent = mu * kappa * distance;
    if exponent < LINEAR_EXPONENT {
        return (n_distal + c * distance, exponent);
    }
    // -C/(mu k) + (n + C/(mu k)) e^x, rearranged to avoid cancellation
    let n = n_distal * exponent.exp() + c / (mu * kappa) * exponent.exp_m1();
    (n, exponent)
}

/// Carries the internal force across one segment, from its tip-side end to
/// its base-side end.
pub fn segment_backstep(
    n_distal: f64,
    seg: &ArcSegment,
    params: &TissueParams,
) -> Result<SegmentForceState> {
    if !n_distal.is_finite() {
        return Err(Error::NonFinite("distal internal force"));
    }
    if n_distal <= 0.0 {
        return Err(Error::InvalidTissue(format!(
            "distal internal force must be > 0, got {n_distal}"
        )));
    }
    let kappa = seg.curvature();
    let exponent = params.mu * kappa * seg.length();
    if exponent > SATURATION_EXPONENT {
        return Err(Error::Saturation { exponent });
    }
    let (n_proximal, _) = closed_form(n_distal, params.c_friction, params.mu, kappa, seg.length());
    if !n_proximal.is_finite() {
        return Err(Error::Saturation { exponent });
    }
    Ok(SegmentForceState {
        n_distal,
        n_proximal,
        f_t_max: kappa * n_proximal,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceSample {
    /// Arc length from the base (m).
    pub s: f64,
    /// Internal compression force (N).
    pub n: f64,
    /// Tissue normal force per unit length (N/m).
    pub f_t: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForceProfile {
    /// Ordered base to tip. A curvature discontinuity yields two samples at the
    /// same `s`, one per side.
    pub samples: Vec<ForceSample>,
    pub insertion_force: f64,
    pub max_tissue_force: f64,
    pub argmax_s: f64,
}

impl ForceProfile {
    fn from_samples(samples: Vec<ForceSample>) -> Self {
        let insertion_force = samples.first().map_or(f64::NAN, |x| x.n);
        let (mut max_tissue_force, mut argmax_s) = (0.0, 0.0);
        for sample in &samples {
            if sample.f_t > max_tissue_force {
                max_tissue_force = sample.f_t;
                argmax_s = sample.s;
            }
        }
        Self {
            samples,
            insertion_force,
            max_tissue_force,
            argmax_s,
        }
    }

    /// Writes the `s_m,n_N,ft_N_per_m` CSV form.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "s_m,n_N,ft_N_per_m")?;
        for x in &self.samples {
            writeln!(w, "{},{},{}", x.s, x.n, x.f_t)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }
}

fn subdivisions(length: f64, resolution: f64) -> usize {
    ((length / resolution).ceil() as usize).max(1)
}

/// Distance of sample `j` of `m` from a segment's distal end.
fn sample_offset(length: f64, j: usize, m: usize) -> f64 {
    if j == m {
        length
    } else {
        length * j as f64 / m as f64
    }
}

/// Assembles per-segment sample runs (each ordered base to tip) into a profile,
/// dropping the repeated boundary sample where curvature does not change.
fn assemble(path: &NeedlePath, per_segment: Vec<Vec<ForceSample>>) -> ForceProfile {
    let segs = path.segments();
    let mut samples = Vec::new();
    for (i, run) in per_segment.into_iter().enumerate() {
        let skip_first = i > 0 && segs[i - 1].curvature() == segs[i].curvature();
        samples.extend(run.into_iter().skip(usize::from(skip_first)));
    }
    ForceProfile::from_samples(samples)
}

fn check_piercing_force(piercing_force: f64) -> Result<()> {
    if !(piercing_force > 0.0 && piercing_force.is_finite()) {
        return Err(Error::InvalidTissue(format!(
            "piercing force must be > 0, got {piercing_force}"
        )));
    }
    Ok(())
}

fn check_params_len(path: &NeedlePath, params: &[TissueParams]) -> Result<()> {
    if params.len() != path.segments().len() {
        return Err(Error::InvalidTissue(format!(
            "expected {} per-segment parameter sets, got {}",
            path.segments().len(),
            params.len()
        )));
    }
    Ok(())
}

/// Closed-form profile with per-segment friction parameters (their piercing
/// force fields are ignored) and the tip condition `n(L) = piercing_force`.
pub fn internal_force_profile_piecewise(
    path: &NeedlePath,
    params: &[TissueParams],
    piercing_force: f64,
    resolution: f64,
) -> Result<ForceProfile> {
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(Error::InvalidResolution(resolution));
    }
    check_params_len(path, params)?;
    check_piercing_force(piercing_force)?;
    let segs = path.segments();
    let bounds = path.boundaries();
    let mut runs = vec![Vec::new(); segs.len()];
    let mut n_tip = piercing_force;
    let mut cumulative = 0.0;
    for i in (0..segs.len()).rev() {
        let (seg, p) = (&segs[i], &params[i]);
        let kappa = seg.curvature();
        let m = subdivisions(seg.length(), resolution);
        let mut run = Vec::with_capacity(m + 1);
        for j in 0..=m {
            let d = sample_offset(seg.length(), j, m);
            let (n, exponent) = closed_form(n_tip, p.c_friction, p.mu, kappa, d);
            if cumulative + exponent > SATURATION_EXPONENT || !n.is_finite() {
                return Err(Error::Saturation {
                    exponent: cumulative + exponent,
                });
            }
            let s = if j == m { bounds[i] } else { bounds[i + 1] - d };
            run.push(ForceSample { s, n, f_t: kappa * n });
        }
        cumulative += p.mu * kappa * seg.length();
        n_tip = run.last().expect("run has samples").n;
        run.reverse();
        runs[i] = run;
    }
    Ok(assemble(path, runs))
}

pub fn internal_force_profile(
    path: &NeedlePath,
    params: &TissueParams,
    resolution: f64,
) -> Result<ForceProfile> {
    internal_force_profile_piecewise(
        path,
        &vec![*params; path.segments().len()],
        params.piercing_force,
        resolution,
    )
}

/// Fixed-step RK4 integration of `dn/ds = -C(s) - mu(s) kappa(s) n` from the
/// tip backwards. Each segment is split into `ceil(length / step)` equal steps
/// so that samples line up with [`internal_force_profile`] at the same
/// resolution.
pub fn internal_force_numeric<C, M>(
    path: &NeedlePath,
    c_of_s: C,
    mu_of_s: M,
    piercing_force: f64,
    step: f64,
) -> Result<ForceProfile>
where
    C: Fn(f64) -> f64,
    M: Fn(f64) -> f64,
{
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidResolution(step));
    }
    check_piercing_force(piercing_force)?;
    let segs = path.segments();
    let bounds = path.boundaries();
    let mut runs = vec![Vec::new(); segs.len()];
    let mut n = piercing_force;
    for i in (0..segs.len()).rev() {
        let kappa = segs[i].curvature();
        let s_tip = bounds[i + 1];
        let m = subdivisions(segs[i].length(), step);
        let h = segs[i].length() / m as f64;
        // derivative with respect to distance u = s_tip - s
        let rate = |u: f64, n: f64| -> Result<f64> {
            let s = s_tip - u;
            let (c, mu) = (c_of_s(s), mu_of_s(s));
            if !(c.is_finite() && mu.is_finite()) {
                return Err(Error::NonFinite("tissue coefficient"));
            }
            Ok(c + mu * kappa * n)
        };
        let mut run = Vec::with_capacity(m + 1);
        run.push(ForceSample {
            s: s_tip,
            n,
            f_t: kappa * n,
        });
        for j in 0..m {
            let u = h * j as f64;
            let k1 = rate(u, n)?;
            let k2 = rate(u + 0.5 * h, n + 0.5 * h * k1)?;
            let k3 = rate(u + 0.5 * h, n + 0.5 * h * k2)?;
            let k4 = rate(u + h, n + h * k3)?;
            n += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if !n.is_finite() {
                return Err(Error::NonFinite("internal force"));
            }
            let s = if j + 1 == m {
                bounds[i]
            } else {
                s_tip - sample_offset(segs[i].length(), j + 1, m)
            };
            run.push(ForceSample { s, n, f_t: kappa * n });
        }
        run.reverse();
        runs[i] = run;
    }
    Ok(assemble(path, runs))
}

/// Bottleneck cost of a path with per-segment friction parameters and tip
/// condition `n(L) = piercing_force`; `+inf` on saturation.
pub fn max_tissue_force_piecewise(
    path: &NeedlePath,
    params: &[TissueParams],
    piercing_force: f64,
) -> Result<f64> {
    check_params_len(path, params)?;
    check_piercing_force(piercing_force)?;
    let segs = path.segments();
    let mut n = piercing_force;
    let mut cumulative = 0.0;
    let mut worst: f64 = 0.0;
    for (seg, p) in segs.iter().zip(params).rev() {
        cumulative += p.mu * seg.curvature() * seg.length();
        if cumulative > SATURATION_EXPONENT {
            return Ok(f64::INFINITY);
        }
        match segment_backstep(n, seg, p) {
            Ok(state) => {
                worst = worst.max(state.f_t_max);
                n = state.n_proximal;
            }
            Err(Error::Saturation { .. }) => return Ok(f64::INFINITY),
            Err(e) => return Err(e),
        }
    }
    Ok(worst)
}

/// Maximum tissue normal force along `path` (N/m), exact for piecewise-constant
/// curvature. Saturated paths price as `+inf`.
pub fn max_tissue_force(path: &NeedlePath, params: &TissueParams) -> f64 {
    max_tissue_force_piecewise(
        path,
        &vec![*params; path.segments().len()],
        params.piercing_force,
    )
    .expect("parameter count and piercing force are valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::Pose;
    use proptest::prelude::*;

    fn reference() -> TissueParams {
        TissueParams::default()
    }

    fn arc(kappa: f64, length: f64) -> ArcSegment {
        ArcSegment::new(0.0, kappa, length).unwrap()
    }

    fn path(segs: Vec<ArcSegment>) -> NeedlePath {
        NeedlePath::new(Pose::identity(), segs).unwrap()
    }

    /// Plain RK4 on the single-segment ODE, written independently of the
    /// library integrator.
    fn rk4_single(n_tip: f64, c: f64, mu: f64, kappa: f64, length: f64, h: f64) -> f64 {
        let steps = (length / h).round() as usize;
        let h = length / steps as f64;
        let f = |n: f64| c + mu * kappa * n;
        let mut n = n_tip;
        for _ in 0..steps {
            let k1 = f(n);
            let k2 = f(n + 0.5 * h * k1);
            let k3 = f(n + 0.5 * h * k2);
            let k4 = f(n + h * k3);
            n += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        n
    }

    #[test]
    fn backstep_straight() {
        let st = segment_backstep(0.4, &arc(0.0, 0.1), &reference()).unwrap();
        assert!((st.n_proximal - 8.775).abs() < 1e-12);
        assert_eq!(st.f_t_max, 0.0);
    }

    #[test]
    fn backstep_arc_matches_oracle() {
        let st = segment_backstep(0.4, &arc(10.0, 0.05), &reference()).unwrap();
        let oracle = rk4_single(0.4, 83.75, 0.32, 10.0, 0.05, 1e-5);
        assert!((st.n_proximal - oracle).abs() / oracle < 1e-9);
        assert!((st.n_proximal - 5.0106).abs() < 1e-4);
        assert!((st.f_t_max - 50.106).abs() < 1e-3);
        // textbook closed form
        let q = 83.75 / (0.32 * 10.0);
        let textbook = -q + (0.4 + q) * (0.32f64 * 10.0 * 0.05).exp();
        assert!((st.n_proximal - textbook).abs() < 1e-12);
    }

    #[test]
    fn backstep_zero_friction() {
        let params = TissueParams::new(0.0, 0.0, 0.4).unwrap();
        let st = segment_backstep(0.4, &arc(10.0, 0.05), &params).unwrap();
        assert_eq!(st.n_proximal, 0.4);
        assert_eq!(st.f_t_max, 4.0);
    }

    #[test]
    fn backstep_errors() {
        assert!(matches!(
            segment_backstep(f64::NAN, &arc(1.0, 0.1), &reference()),
            Err(Error::NonFinite(_))
        ));
        let sticky = TissueParams::new(83.75, 1000.0, 0.4).unwrap();
        assert!(matches!(
            segment_backstep(0.4, &arc(100.0, 0.01), &sticky),
            Err(Error::Saturation { .. })
        ));
    }

    #[test]
    fn tissue_params_validation() {
        assert!(TissueParams::new(-1.0, 0.3, 0.4).is_err());
        assert!(TissueParams::new(1.0, -0.3, 0.4).is_err());
        assert!(TissueParams::new(1.0, 0.3, 0.0).is_err());
        assert!(TissueParams::new(f64::INFINITY, 0.3, 0.4).is_err());
    }

    #[test]
    fn straight_profile() {
        let prof = internal_force_profile(&path(vec![arc(0.0, 0.1)]), &reference(), 1e-3).unwrap();
        assert!((prof.insertion_force - 8.775).abs() < 1e-12);
        assert_eq!(prof.max_tissue_force, 0.0);
        assert_eq!(prof.samples.last().unwrap().n, 0.4);
    }

    #[test]
    fn distal_and_proximal_arc_ordering() {
        let tip_arc = path(vec![arc(0.0, 0.05), arc(10.0, 0.05)]);
        let base_arc = path(vec![arc(10.0, 0.05), arc(0.0, 0.05)]);
        let tip = internal_force_profile(&tip_arc, &reference(), 1e-3).unwrap();
        let base = internal_force_profile(&base_arc, &reference(), 1e-3).unwrap();

        let n1 = rk4_single(0.4, 83.75, 0.32, 10.0, 0.05, 1e-5);
        let n0 = rk4_single(n1, 83.75, 0.32, 0.0, 0.05, 1e-5);
        assert!((tip.max_tissue_force - 10.0 * n1).abs() / (10.0 * n1) < 1e-9);
        assert!((tip.insertion_force - n0).abs() / n0 < 1e-9);
        assert!((tip.insertion_force - 9.198).abs() < 1e-3);
        assert!((tip.argmax_s - 0.05).abs() < 1e-15);

        let m1 = rk4_single(0.4, 83.75, 0.32, 0.0, 0.05, 1e-5);
        let m0 = rk4_single(m1, 83.75, 0.32, 10.0, 0.05, 1e-5);
        assert!((base.max_tissue_force - 10.0 * m0).abs() / (10.0 * m0) < 1e-9);
        assert!((base.max_tissue_force - 99.25).abs() < 0.01);
        assert_eq!(base.argmax_s, 0.0);

        assert_eq!(max_tissue_force(&tip_arc, &reference()), tip.max_tissue_force);
        assert_eq!(max_tissue_force(&base_arc, &reference()), base.max_tissue_force);
    }

    #[test]
    fn discontinuity_has_two_samples() {
        let prof =
            internal_force_profile(&path(vec![arc(0.0, 0.05), arc(10.0, 0.05)]), &reference(), 0.01)
                .unwrap();
        let at: Vec<_> = prof.samples.iter().filter(|x| x.s == 0.05).collect();
        assert_eq!(at.len(), 2);
        assert_eq!(at[0].n, at[1].n);
        assert_eq!(at[0].f_t, 0.0);
        assert!(at[1].f_t > 0.0);

        let same_kappa =
            internal_force_profile(&path(vec![arc(5.0, 0.05), arc(5.0, 0.05)]), &reference(), 0.01)
                .unwrap();
        assert_eq!(same_kappa.samples.iter().filter(|x| x.s == 0.05).count(), 1);
    }

    #[test]
    fn numeric_special_cases() {
        let p = path(vec![arc(3.0, 0.04), arc(12.0, 0.03)]);
        let frictionless = internal_force_numeric(&p, |_| 0.0, |_| 0.0, 0.4, 1e-3).unwrap();
        assert!(frictionless.samples.iter().all(|x| x.n == 0.4));

        let straight = path(vec![arc(0.0, 0.1)]);
        let linear = internal_force_numeric(&straight, |_| 83.75, |_| 0.0, 0.4, 1e-3).unwrap();
        assert!((linear.insertion_force - 8.775).abs() < 1e-12);

        assert!(internal_force_numeric(&p, |_| f64::NAN, |_| 0.0, 0.4, 1e-3).is_err());
        assert!(internal_force_numeric(&p, |_| 1.0, |_| 0.0, 0.4, 0.0).is_err());
    }

    #[test]
    fn heterogeneous_numeric_matches_piecewise() {
        let p = path(vec![arc(4.0, 0.05), arc(15.0, 0.04), arc(0.0, 0.02)]);
        let params = [
            TissueParams::new(120.0, 0.5, 0.4).unwrap(),
            TissueParams::new(60.0, 0.2, 0.4).unwrap(),
            TissueParams::new(83.75, 0.32, 0.4).unwrap(),
        ];
        let closed = internal_force_profile_piecewise(&p, &params, 0.4, 1e-4).unwrap();
        let b = p.boundaries().to_vec();
        let pick = move |s: f64| if s < b[1] { 0 } else if s < b[2] { 1 } else { 2 };
        let pick2 = pick.clone();
        let numeric = internal_force_numeric(
            &p,
            move |s| params[pick(s)].c_friction(),
            move |s| params[pick2(s)].mu(),
            0.4,
            1e-4,
        )
        .unwrap();
        assert_eq!(closed.samples.len(), numeric.samples.len());
        // the first RK4 stage of each segment evaluates the coefficient functions
        // exactly on the boundary, where they report the distal segment's values
        // (one O(h) stage error per boundary)
        for (a, b) in closed.samples.iter().zip(&numeric.samples) {
            assert_eq!(a.s, b.s);
            assert!((a.n - b.n).abs() / a.n < 1e-3, "{} vs {}", a.n, b.n);
        }
    }

    #[test]
    fn csv_format() {
        let prof = internal_force_profile(&path(vec![arc(0.0, 0.1)]), &reference(), 0.05).unwrap();
        let csv = prof.to_csv_string();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("s_m,n_N,ft_N_per_m"));
        let rows: Vec<Vec<f64>> = lines
            .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
            .collect();
        assert_eq!(rows.len(), 3);
        for (row, sample) in rows.iter().zip(&prof.samples) {
            assert_eq!(row[0], sample.s);
            assert_eq!(row[1], sample.n);
            assert_eq!(row[2], sample.f_t);
        }
    }

    #[test]
    fn saturated_path_is_infinitely_costly() {
        let sticky = TissueParams::new(83.75, 5.0, 0.4).unwrap();
        let segs = vec![arc(200.0, 0.1); 10];
        let p = path(segs);
        assert_eq!(max_tissue_force(&p, &sticky), f64::INFINITY);
        assert!(matches!(
            internal_force_profile(&p, &sticky, 1e-3),
            Err(Error::Saturation { .. })
        ));
    }

    fn arb_path() -> impl Strategy<Value = NeedlePath> {
        prop::collection::vec((0.0..20.0f64, 0.01..0.1f64), 1..=10).prop_map(|v| {
            path(v.into_iter().map(|(k, l)| arc(k, l)).collect())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn closed_form_matches_rk4(p in arb_path()) {
            let closed = internal_force_profile(&p, &reference(), 1e-4).unwrap();
            let numeric = internal_force_numeric(&p, |_| 83.75, |_| 0.32, 0.4, 1e-4).unwrap();
            prop_assert_eq!(closed.samples.len(), numeric.samples.len());
            for (a, b) in closed.samples.iter().zip(&numeric.samples) {
                prop_assert_eq!(a.s, b.s);
                prop_assert!((a.n - b.n).abs() / a.n < 1e-6);
            }
        }

        #[test]
        fn profile_invariants(p in arb_path()) {
            let prof = internal_force_profile(&p, &reference(), 1e-3).unwrap();
            for w in prof.samples.windows(2) {
                prop_assert!(w[0].s <= w[1].s);
                prop_assert!(w[0].n >= w[1].n);
                if w[0].s == w[1].s {
                    prop_assert!((w[0].n - w[1].n).abs() < 1e-9);
                }
            }
            let b = p.boundaries();
            for x in &prof.samples {
                prop_assert!(x.n > 0.0);
                // f_t = kappa * n for one of the segments touching s
                let owns = p.segments().iter().enumerate().any(|(i, seg)| {
                    b[i] <= x.s && x.s <= b[i + 1] && x.f_t == seg.curvature() * x.n
                });
                prop_assert!(owns);
            }
            prop_assert_eq!(prof.max_tissue_force, max_tissue_force(&p, &reference()));
        }

        #[test]
        fn frictionless_force_is_curvature_times_fp(p in arb_path()) {
            let params = TissueParams::new(0.0, 0.0, 0.4).unwrap();
            let prof = internal_force_profile(&p, &params, 1e-3).unwrap();
            for x in &prof.samples {
                prop_assert!((x.n - 0.4).abs() <= 1e-12);
            }
            let expected = p.segments().iter().map(|s| s.curvature() * 0.4).fold(0.0, f64::max);
            prop_assert!((max_tissue_force(&p, &params) - expected).abs() <= 1e-12);
        }

        #[test]
        fn convex_growth_in_arc_length(kappa in 0.5..20.0f64, l in 0.01..0.1f64) {
            let h = 1e-3;
            let n = |len: f64| segment_backstep(0.4, &arc(kappa, len), &reference()).unwrap().n_proximal;
            let (a, b, c) = (n(l - h), n(l), n(l + h));
            prop_assert!(c > b && b > a);
            prop_assert!(a - 2.0 * b + c > 0.0);
        }

        #[test]
        fn prepending_keeps_distal_forces(p in arb_path(), k in 0.0..20.0f64, l in 0.01..0.1f64) {
            let before = internal_force_profile(&p, &reference(), 1e-3).unwrap();
            let mut segs = vec![arc(k, l)];
            segs.extend_from_slice(p.segments());
            let longer = path(segs);
            let after = internal_force_profile(&longer, &reference(), 1e-3).unwrap();
            let tail = &after.samples[after.samples.len() - before.samples.len()..];
            for (a, b) in before.samples.iter().zip(tail) {
                prop_assert!((a.s + l - b.s).abs() < 1e-12);
                prop_assert_eq!(a.n, b.n);
                prop_assert_eq!(a.f_t, b.f_t);
            }
        }

        #[test]
        fn arc_at_tip_beats_arc_at_base(kappa in 0.5..20.0f64, la in 0.01..0.1f64, ls in 0.01..0.1f64) {
            let tip = path(vec![arc(0.0, ls), arc(kappa, la)]);
            let base = path(vec![arc(kappa, la), arc(0.0, ls)]);
            prop_assert!(max_tissue_force(&tip, &reference()) < max_tissue_force(&base, &reference()));
        }
    }
}
