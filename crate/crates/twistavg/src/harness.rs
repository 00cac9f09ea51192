//! Orchestration and reporting: full verification runs of the average
//! identity, sweep tables over parameter grids, and single-value probes.

use crate::chars::DirichletCharacter;
use crate::geometry::{
    e_bound, e_sum, identity_term, j_chi, q_ratio, weyl_term, GeomConfig,
};
use crate::lfun::{spectral_side, SpectralConfig};
use crate::prec::{Approx, Precision};
use crate::specfun::one_f_one_series;
use crate::{Error, Result};
use rayon::prelude::*;
use rug::{Complex, Float};
use serde::{Deserialize, Serialize};

/// One verification run, fully self-describing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub k: u32,
    #[serde(rename = "N")]
    pub level: u64,
    pub chi: String,
    #[serde(default)]
    pub psi: Option<String>,
    pub r: u64,
    pub n: u64,
    /// "RE" or "RE+IMi" / "RE-IMi"
    pub s: String,
    pub cutoff_a: u64,
    pub cutoff_d: u64,
    pub prec: u32,
    pub tol: f64,
}

/// "9", "8.5+2i", "7-0.25i"
pub fn parse_s(text: &str) -> Result<(f64, f64)> {
    let t = text.trim();
    if let Some(body) = t.strip_suffix('i') {
        // split at the last +/- that is not a leading sign or exponent sign
        let chars: Vec<char> = body.chars().collect();
        for i in (1..chars.len()).rev() {
            let ch = chars[i];
            if (ch == '+' || ch == '-') && chars[i - 1] != 'e' && chars[i - 1] != 'E' {
                let re: f64 = body[..i]
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad real part in '{text}'")))?;
                let imtxt = &body[i..];
                let im: f64 = if imtxt == "+" || imtxt == "-" {
                    format!("{imtxt}1").parse().unwrap()
                } else {
                    imtxt
                        .parse()
                        .map_err(|_| Error::invalid(format!("bad imaginary part in '{text}'")))?
                };
                return Ok((re, im));
            }
        }
        let im: f64 = body
            .parse()
            .map_err(|_| Error::invalid(format!("bad imaginary part in '{text}'")))?;
        return Ok((0.0, im));
    }
    let re: f64 = t
        .parse()
        .map_err(|_| Error::invalid(format!("bad s value '{text}'")))?;
    Ok((re, 0.0))
}

pub fn format_s(re: f64, im: f64) -> String {
    if im == 0.0 {
        format!("{re}")
    } else if im < 0.0 {
        format!("{re}{im}i")
    } else {
        format!("{re}+{im}i")
    }
}

impl RunConfig {
    pub fn geom_config(&self, prec: &Precision) -> Result<GeomConfig> {
        let wb = prec.working();
        let chi = DirichletCharacter::parse_label(&self.chi)?;
        let psi = match &self.psi {
            Some(label) => DirichletCharacter::parse_label(label)?,
            None => DirichletCharacter::trivial(),
        };
        let (re, im) = parse_s(&self.s)?;
        let s = Complex::with_val(wb, (Float::with_val(wb, re), Float::with_val(wb, im)));
        GeomConfig::new(self.k, self.level, psi, chi, self.r, self.n, s)
    }
}

/// A complex value with its error budget, serialized as decimal strings so
/// downstream consumers cannot silently round the evidence.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportValue {
    pub re: String,
    pub im: String,
    pub err: String,
    pub prec_bits: u32,
}

impl ReportValue {
    pub fn from_approx(v: &Approx, prec: &Precision) -> Self {
        let digits = (prec.working() as f64 * 0.3010).ceil() as usize + 2;
        ReportValue {
            re: v.value.real().to_string_radix(10, Some(digits)),
            im: v.value.imag().to_string_radix(10, Some(digits)),
            err: format!("{:e}", v.err),
            prec_bits: prec.working(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub config: RunConfig,
    /// absent in geometry-only mode (N > 1)
    pub spectral: Option<ReportValue>,
    pub identity: ReportValue,
    pub weyl: ReportValue,
    pub e_value: ReportValue,
    pub e_tail: String,
    pub e_bound: String,
    /// |spectral - identity - weyl - E|; absent in geometry-only mode
    pub residual: Option<String>,
    /// combined error budget of all four quantities
    pub budget: String,
    /// |E| + tail <= closed-form envelope
    pub bound_ok: bool,
    pub pass: bool,
    pub geometry_only: bool,
    pub spectral_ms: u64,
    pub geometry_ms: u64,
}

/// Compute both sides of the average identity independently and compare.
///
/// The left side is the spectral average of completed twisted L-values; the
/// right side is identity term + Weyl term + truncated E with its tail
/// folded into the budget.  Pass means the residual is below the larger of
/// the numerical budget and the requested relative tolerance.
pub fn verify_identity(cfg: &RunConfig) -> Result<VerificationReport> {
    let prec = Precision::new(cfg.prec);
    let g = cfg.geom_config(&prec)?;
    let geometry_only = cfg.level != 1;

    let t0 = std::time::Instant::now();
    let idt = identity_term(&prec, &g)?;
    let wey = weyl_term(&prec, &g)?;
    let (ev, tail) = e_sum(&prec, &g, cfg.cutoff_a, cfg.cutoff_d)?;
    let envelope = e_bound(&g)?;
    let geometry_ms = t0.elapsed().as_millis() as u64;

    let scale = idt.abs_f64().max(1e-30);
    let tol_abs = cfg.tol * scale;

    let (spectral, residual, spectral_ms) = if geometry_only {
        (None, None, 0)
    } else {
        let t1 = std::time::Instant::now();
        let sc = SpectralConfig::new(cfg.k, g.chi.clone(), cfg.r, cfg.n, g.s.clone())?;
        let spec = spectral_side(&prec, &sc, (tol_abs / 8.0).max(1e-30))?;
        let ms = t1.elapsed().as_millis() as u64;
        let rhs = idt.add(&wey).add(&ev);
        let res = spec.sub(&rhs).abs_f64();
        (Some(spec), Some(res), ms)
    };

    let budget = spectral.as_ref().map_or(0.0, |v| v.err) + idt.err + wey.err + ev.err;
    let bound_ok = ev.abs_f64() + tail <= envelope;
    let pass = match residual {
        Some(res) => res <= budget.max(tol_abs) && bound_ok,
        None => bound_ok,
    };

    Ok(VerificationReport {
        config: cfg.clone(),
        spectral: spectral.as_ref().map(|v| ReportValue::from_approx(v, &prec)),
        identity: ReportValue::from_approx(&idt, &prec),
        weyl: ReportValue::from_approx(&wey, &prec),
        e_value: ReportValue::from_approx(&ev, &prec),
        e_tail: format!("{tail:e}"),
        e_bound: format!("{envelope:e}"),
        residual: residual.map(|r| format!("{r:e}")),
        budget: format!("{budget:e}"),
        bound_ok,
        pass,
        geometry_only,
        spectral_ms,
        geometry_ms,
    })
}

/// One row of a sweep table.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub config: RunConfig,
    pub identity_mag: Option<f64>,
    pub weyl_mag: Option<f64>,
    pub e_mag: Option<f64>,
    pub e_tail: Option<f64>,
    pub q_ratio: Option<f64>,
    pub e_bound: Option<f64>,
    pub runtime_ms: u64,
    pub error: Option<String>,
}

pub const SWEEP_HEADER: &str =
    "k,N,D,chi,r,n,s,cutoff_a,cutoff_d,prec,identity_mag,weyl_mag,e_mag,e_tail,q_ratio,e_bound,runtime_ms,error";

impl SweepRow {
    pub fn csv_line(&self) -> String {
        fn f(v: Option<f64>) -> String {
            v.map_or(String::new(), |x| format!("{x:.12e}"))
        }
        let c = &self.config;
        let chi = DirichletCharacter::parse_label(&c.chi)
            .map(|x| x.modulus)
            .unwrap_or(0);
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            c.k,
            c.level,
            chi,
            c.chi,
            c.r,
            c.n,
            c.s,
            c.cutoff_a,
            c.cutoff_d,
            c.prec,
            f(self.identity_mag),
            f(self.weyl_mag),
            f(self.e_mag),
            f(self.e_tail),
            f(self.q_ratio),
            f(self.e_bound),
            self.runtime_ms,
            self.error.clone().unwrap_or_default(),
        )
    }
}

fn sweep_row(cfg: &RunConfig) -> SweepRow {
    let t0 = std::time::Instant::now();
    let prec = Precision::new(cfg.prec);
    let out = (|| -> Result<(f64, f64, f64, f64, f64, f64)> {
        let g = cfg.geom_config(&prec)?;
        let idt = identity_term(&prec, &g)?;
        let wey = weyl_term(&prec, &g)?;
        let (ev, tail) = e_sum(&prec, &g, cfg.cutoff_a, cfg.cutoff_d)?;
        let q = (ev.abs_f64() + tail) / idt.abs_f64().max(1e-30);
        Ok((
            idt.abs_f64(),
            wey.abs_f64(),
            ev.abs_f64(),
            tail,
            q,
            e_bound(&g)?,
        ))
    })();
    let runtime_ms = t0.elapsed().as_millis() as u64;
    match out {
        Ok((i, w, e, t, q, b)) => SweepRow {
            config: cfg.clone(),
            identity_mag: Some(i),
            weyl_mag: Some(w),
            e_mag: Some(e),
            e_tail: Some(t),
            q_ratio: Some(q),
            e_bound: Some(b),
            runtime_ms,
            error: None,
        },
        Err(e) => SweepRow {
            config: cfg.clone(),
            identity_mag: None,
            weyl_mag: None,
            e_mag: None,
            e_tail: None,
            q_ratio: None,
            e_bound: None,
            runtime_ms,
            error: Some(e.to_string().replace(',', ";")),
        },
    }
}

/// Evaluate every grid entry (rows in parallel, failures recorded in-row)
/// and return the rows in grid order.
pub fn sweep(grid: &[RunConfig]) -> Vec<SweepRow> {
    grid.par_iter().map(sweep_row).collect()
}

pub fn sweep_csv(grid: &[RunConfig], out: &mut dyn std::io::Write) -> Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    for row in sweep(grid) {
        writeln!(out, "{}", row.csv_line())?;
    }
    Ok(())
}

fn probe_names() -> String {
    "gauss_sum LABEL | one_f_one RE[+IMi] K W | j_chi LABEL A D | identity_term K CHI R N S | weyl_term K N CHI R N S | e_bound K N CHI R N S | q_ratio K N CHI R N S CUTA CUTD".into()
}

fn probe_geom(args: &[String], with_level: bool) -> Result<GeomConfig> {
    let prec = Precision::new(128);
    let wb = prec.working();
    let mut it = args.iter();
    let mut next = || -> Result<&String> {
        it.next().ok_or_else(|| Error::invalid("missing probe argument"))
    };
    let k: u32 = next()?.parse().map_err(|_| Error::invalid("bad k"))?;
    let level: u64 = if with_level {
        next()?.parse().map_err(|_| Error::invalid("bad N"))?
    } else {
        1
    };
    let chi = DirichletCharacter::parse_label(next()?)?;
    let r: u64 = next()?.parse().map_err(|_| Error::invalid("bad r"))?;
    let n: u64 = next()?.parse().map_err(|_| Error::invalid("bad n"))?;
    let (re, im) = parse_s(next()?)?;
    let s = Complex::with_val(wb, (Float::with_val(wb, re), Float::with_val(wb, im)));
    GeomConfig::new(k, level, DirichletCharacter::trivial(), chi, r, n, s)
}

/// Evaluate a single named sub-formula and print value and error.
pub fn probe(name: &str, args: &[String], out: &mut dyn std::io::Write) -> Result<()> {
    let prec = Precision::new(128);
    let wb = prec.working();
    let show = |out: &mut dyn std::io::Write, v: &Approx| -> Result<()> {
        writeln!(
            out,
            "value = {} + {}i   (err <= {:e})",
            v.value.real().to_string_radix(10, Some(30)),
            v.value.imag().to_string_radix(10, Some(30)),
            v.err
        )?;
        Ok(())
    };
    match name {
        "gauss_sum" => {
            let chi = DirichletCharacter::parse_label(
                args.first().ok_or_else(|| Error::invalid("need a character label"))?,
            )?;
            show(out, &chi.gauss_sum(&prec))
        }
        "one_f_one" => {
            if args.len() < 3 {
                return Err(Error::invalid("need s, k, w"));
            }
            let (re, im) = parse_s(&args[0])?;
            let s = Complex::with_val(wb, (Float::with_val(wb, re), Float::with_val(wb, im)));
            let k: u32 = args[1].parse().map_err(|_| Error::invalid("bad k"))?;
            let w: f64 = args[2].parse().map_err(|_| Error::invalid("bad w"))?;
            let wc = Complex::with_val(wb, (Float::new(wb), Float::with_val(wb, w)));
            show(out, &one_f_one_series(&prec, &s, k, &wc)?)
        }
        "j_chi" => {
            if args.len() < 3 {
                return Err(Error::invalid("need label, a, d"));
            }
            let chi = DirichletCharacter::parse_label(&args[0])?;
            let a: i64 = args[1].parse().map_err(|_| Error::invalid("bad a"))?;
            let d: u64 = args[2].parse().map_err(|_| Error::invalid("bad d"))?;
            let s = Complex::with_val(wb, 9);
            let g = GeomConfig::new(12, 1, DirichletCharacter::trivial(), chi, 1, 1, s)?;
            show(out, &j_chi(&prec, a, d, &g)?)
        }
        "identity_term" => {
            let g = probe_geom(args, false)?;
            show(out, &identity_term(&prec, &g)?)
        }
        "weyl_term" => {
            let g = probe_geom(args, true)?;
            show(out, &weyl_term(&prec, &g)?)
        }
        "e_bound" => {
            let g = probe_geom(args, true)?;
            writeln!(out, "value = {:e}", e_bound(&g)?)?;
            Ok(())
        }
        "q_ratio" => {
            if args.len() < 8 {
                return Err(Error::invalid("need k, N, chi, r, n, s, cutoff_a, cutoff_d"));
            }
            let g = probe_geom(&args[..6], true)?;
            let ca: u64 = args[6].parse().map_err(|_| Error::invalid("bad cutoff_a"))?;
            let cd: u64 = args[7].parse().map_err(|_| Error::invalid("bad cutoff_d"))?;
            writeln!(out, "value = {:e}", q_ratio(&prec, &g, ca, cd)?)?;
            Ok(())
        }
        other => Err(Error::UnknownProbe(other.to_string(), probe_names())),
    }
}

/// Honor the worker-count environment variable before any parallel work.
pub const WORKERS_ENV: &str = "TWISTAVG_WORKERS";

pub fn init_workers() {
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        if let Ok(nn) = v.parse::<usize>() {
            if nn >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(nn).build_global();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn s_parsing_round_trip() {
        assert_eq!(parse_s("9").unwrap(), (9.0, 0.0));
        assert_eq!(parse_s("8.5+2i").unwrap(), (8.5, 2.0));
        assert_eq!(parse_s("7-0.25i").unwrap(), (7.0, -0.25));
        assert_eq!(parse_s("-3.5+1e-2i").unwrap(), (-3.5, 0.01));
        assert_eq!(parse_s("2i").unwrap(), (0.0, 2.0));
        assert!(parse_s("bogus").is_err());
        assert_eq!(format_s(9.0, 0.0), "9");
        assert_eq!(format_s(8.5, 2.0), "8.5+2i");
        assert_eq!(format_s(7.0, -0.25), "7-0.25i");
    }

    fn quick_cfg() -> RunConfig {
        RunConfig {
            k: 12,
            level: 1,
            chi: "4:1".into(),
            psi: None,
            r: 1,
            n: 1,
            s: "9".into(),
            cutoff_a: 60,
            cutoff_d: 20,
            prec: 96,
            tol: 1e-2,
        }
    }

    #[test]
    fn verify_small_run_passes() {
        let rep = verify_identity(&quick_cfg()).unwrap();
        assert!(rep.pass, "residual {:?} budget {}", rep.residual, rep.budget);
        assert!(rep.bound_ok);
        assert!(!rep.geometry_only);
        assert!(rep.spectral.is_some());
    }

    #[test]
    fn verify_reports_are_deterministic() {
        // timings are the one nondeterministic field; zero them before comparing
        let strip = || {
            let mut rep = verify_identity(&quick_cfg()).unwrap();
            rep.spectral_ms = 0;
            rep.geometry_ms = 0;
            serde_json::to_string(&rep).unwrap()
        };
        assert_eq!(strip(), strip());
    }

    #[test]
    fn geometry_only_mode_for_higher_level() {
        let cfg = RunConfig {
            level: 2,
            chi: "1:".into(),
            ..quick_cfg()
        };
        let rep = verify_identity(&cfg).unwrap();
        assert!(rep.geometry_only);
        assert!(rep.spectral.is_none());
        assert!(rep.residual.is_none());
        assert!(rep.pass); // bound check only
    }

    #[test]
    fn sweep_empty_grid_is_header_only() {
        let mut buf = Vec::new();
        sweep_csv(&[], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.trim(), SWEEP_HEADER);
    }

    #[test]
    fn sweep_records_row_failures_and_continues() {
        let good = quick_cfg();
        let bad = RunConfig {
            r: 2, // rn shares a factor with D = 4
            ..quick_cfg()
        };
        let rows = sweep(&[bad, good]);
        assert!(rows[0].error.is_some());
        assert!(rows[1].error.is_none());
        assert!(rows[1].q_ratio.unwrap() > 0.0);
    }

    #[test]
    fn probe_gauss_sum_mod_4() {
        let mut buf = Vec::new();
        probe("gauss_sum", &["4:1".into()], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        // tau(chi mod 4) = 2i
        assert!(text.contains("2.0"), "{text}");
    }

    #[test]
    fn probe_one_f_one_at_zero_is_beta() {
        let mut buf = Vec::new();
        probe(
            "one_f_one",
            &["9".into(), "12".into(), "0".into()],
            &mut buf,
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        // B(9, 3) = 1/495
        assert!(text.contains("2.0202020202"), "{text}");
    }

    #[test]
    fn probe_weyl_higher_level_is_zero() {
        let mut buf = Vec::new();
        probe(
            "weyl_term",
            &["12".into(), "2".into(), "1:".into(), "1".into(), "1".into(), "9".into()],
            &mut buf,
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("value = 0"), "{text}");
    }

    #[test]
    fn probe_unknown_name_lists_probes() {
        let mut buf = Vec::new();
        let err = probe("nonsense", &[], &mut buf).unwrap_err();
        assert!(matches!(err, Error::UnknownProbe(..)));
        assert!(err.to_string().contains("gauss_sum"));
    }
}
