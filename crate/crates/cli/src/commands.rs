use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use pointint_core::bogolyubov::{
    delta_correlator_fused, delta_params, form_factor, form_factor_recursive, matrix_element, BogolyubovParams,
    FieldResolvent,
};
use pointint_core::combinatorics::ln_factorial;
use pointint_core::gaussian::{
    krein_residual, moment_check_mc, random_form, schur_determinants, Field, DEFAULT_MC_SEED, MC_FLAG_SIGMA,
};
use pointint_core::greenfn::{correlator_det, PointInteractionConfig, Resolvent, SpectralParameter};
use pointint_core::linalg::rel_diff;
use pointint_core::oracle::fock::{build_operator, FockTruncation};
use pointint_core::oracle::transfer::TransferGreen;
use pointint_core::sampling::{random_config_with_len, random_real_mass, ConfigRanges};
use pointint_core::tau::{fin_check, tau_collapsed, tau_via_cross_ratio, tau_via_m, Localization};
use pointint_core::Error;

use crate::output::{clean, complex, csv, json_line, value};
use crate::parse;
use crate::{Common, CorrRoute, Failure, FieldArg, FormFactorRoute, OutputFormat, TauRoute};

const CROSSCHECK_TOL: f64 = 1e-9;
const CROSSCHECK_FOCK_DIM: usize = 80;

fn spectral(common: &Common) -> Result<SpectralParameter, Error> {
    let m = common.m.as_deref().ok_or_else(|| Error::InvalidInput("missing --m".into()))?;
    SpectralParameter::new(parse::complex(m)?)
}

fn setup(common: &Common) -> Result<(SpectralParameter, PointInteractionConfig), Error> {
    let cfg = parse::config(common.points.as_deref(), common.config.as_deref())?;
    Ok((spectral(common)?, cfg))
}

fn scalar(common: &Common, z: C64) -> String {
    match common.output {
        OutputFormat::Json => json_line(&value(z)),
        OutputFormat::Csv => csv("re,im", [vec![z.re, z.im]]),
    }
}

fn json_only(common: &Common, what: &str) -> Result<(), Error> {
    if common.output == OutputFormat::Csv {
        return Err(Error::InvalidInput(format!("{what} writes a JSON report only")));
    }
    Ok(())
}

pub fn green(common: &Common, at: Option<&str>, grid: &[String], pool: &rayon::ThreadPool) -> Result<String, Failure> {
    let (sp, cfg) = setup(common)?;
    let resolvent = Resolvent::new(&sp, &cfg)?;
    let (xs, ys) = match (at, grid) {
        (Some(p), []) => {
            let (x, y) = parse::at(p)?;
            (vec![x], vec![y])
        }
        (None, [g]) => {
            let ax = parse::axis(g)?.samples();
            (ax.clone(), ax)
        }
        (None, [gx, gy]) => (parse::axis(gx)?.samples(), parse::axis(gy)?.samples()),
        (None, []) => return Err(Error::InvalidInput("give --at x,y or --grid xmin:xmax:steps".into()).into()),
        _ => return Err(Error::InvalidInput("--grid takes at most two axes and excludes --at".into()).into()),
    };
    let cells: Vec<(f64, f64)> = xs.iter().flat_map(|&x| ys.iter().map(move |&y| (x, y))).collect();
    let values: Vec<C64> = pool.install(|| cells.par_iter().map(|&(x, y)| resolvent.kernel(x, y)).collect());
    if let Some(bad) = values.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
        let (x, y) = cells[bad];
        return Err(Error::InvalidInput(format!("non-finite kernel at ({x}, {y})")).into());
    }
    Ok(match (at.is_some(), common.output) {
        (true, OutputFormat::Json) => json_line(&value(values[0])),
        (false, OutputFormat::Json) => {
            let rows: Vec<Value> = cells
                .iter()
                .zip(&values)
                .map(|(&(x, y), z)| json!({ "x": x, "y": y, "value_re": clean(z.re), "value_im": clean(z.im) }))
                .collect();
            json_line(&json!({ "grid": rows }))
        }
        (_, OutputFormat::Csv) => csv("x,y,re,im", cells.iter().zip(&values).map(|(&(x, y), z)| vec![x, y, z.re, z.im])),
    })
}

pub fn corr(common: &Common, route: CorrRoute) -> Result<String, Failure> {
    let (sp, cfg) = setup(common)?;
    let z = match route {
        CorrRoute::Det => correlator_det(&sp, &cfg)?,
        CorrRoute::Fusion => delta_correlator_fused(&sp, &cfg)?,
    };
    Ok(scalar(common, z))
}

pub fn tau(common: &Common, route: TauRoute) -> Result<String, Failure> {
    let (sp, cfg) = setup(common)?;
    let z = match route {
        TauRoute::Collapsed => tau_collapsed(&sp, &cfg)?,
        TauRoute::M => tau_via_m(&sp, &Localization::default_for(&cfg), &cfg)?,
        TauRoute::CrossRatio => tau_via_cross_ratio(&sp, &Localization::default_for(&cfg), &cfg)?,
    };
    Ok(scalar(common, z))
}

pub fn formfactor(
    common: &Common,
    k: usize,
    l: usize,
    [lambda, mu, nu]: [Option<String>; 3],
    strength: Option<f64>,
    route: FormFactorRoute,
) -> Result<String, Failure> {
    let p = match strength {
        Some(v) => delta_params(v, &spectral(common)?)?,
        None => {
            let get = |s: &Option<String>| s.as_deref().map(parse::complex).unwrap_or(Ok(C64::new(0.0, 0.0)));
            BogolyubovParams::new(get(&lambda)?, get(&mu)?, get(&nu)?)?
        }
    };
    let ln_norm = 0.5 * (ln_factorial(k) + ln_factorial(l));
    let (f, element) = match route {
        FormFactorRoute::Closed => (form_factor(k, l, &p)?, matrix_element(k, l, &p)?),
        FormFactorRoute::Recursive => {
            let f = form_factor_recursive(k, l, &p)?;
            (f, f * (-ln_norm).exp())
        }
        FormFactorRoute::Fock => {
            let t = FockTruncation::new(k.max(l) + 40)?;
            let e = build_operator(&p, &t)?[(k, l)];
            (e * ln_norm.exp(), e)
        }
    };
    Ok(match common.output {
        OutputFormat::Json => json_line(&json!({
            "value_re": clean(f.re),
            "value_im": clean(f.im),
            "matrix_element_re": clean(element.re),
            "matrix_element_im": clean(element.im),
        })),
        OutputFormat::Csv => csv("k,l,re,im,element_re,element_im", [vec![k as f64, l as f64, f.re, f.im, element.re, element.im]]),
    })
}

/// Largest pairwise relative deviation among route values.
fn spread(values: &[C64]) -> f64 {
    let mut worst = 0.0_f64;
    for (i, a) in values.iter().enumerate() {
        for b in &values[i + 1..] {
            worst = worst.max(rel_diff(*a, *b));
        }
    }
    worst
}

pub fn crosscheck(common: &Common, n: usize, pool: &rayon::ThreadPool) -> Result<String, Failure> {
    json_only(common, "crosscheck")?;
    let seed = common.seed.unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (sp, cfg) = match (&common.points, &common.config) {
        (None, None) => {
            if n == 0 || n > 8 {
                return Err(Error::InvalidInput(format!("--n must lie in 1..=8, got {n}")).into());
            }
            let ranges = ConfigRanges { max_points: n, ..ConfigRanges::default() };
            let cfg = random_config_with_len(&mut rng, &ranges, n);
            let sp = match &common.m {
                Some(m) => SpectralParameter::new(parse::complex(m)?)?,
                None => random_real_mass(&mut rng, (0.2, 4.0)),
            };
            (sp, cfg)
        }
        _ => setup(common)?,
    };
    if cfg.is_empty() {
        return Err(Error::InvalidInput("crosscheck needs at least one point".into()).into());
    }

    let krein = Resolvent::new(&sp, &cfg)?;
    let transfer = TransferGreen::new(&sp, &cfg)?;
    let fields = FieldResolvent::new(&sp, &cfg, CROSSCHECK_FOCK_DIM)?;
    let a = cfg.positions();
    let (lo, hi) = (a[0] - 1.0, a[a.len() - 1] + 1.0);
    let axis: Vec<f64> = (0..5).map(|i| lo + (hi - lo) * i as f64 / 4.0).collect();
    let cells: Vec<(f64, f64)> = axis.iter().flat_map(|&x| axis.iter().map(move |&y| (x, y))).collect();
    let green: Vec<Result<[C64; 3], Error>> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(x, y)| Ok([krein.kernel(x, y), transfer.kernel(x, y)?, fields.kernel(x, y)]))
            .collect()
    });
    let green = green.into_iter().collect::<Result<Vec<_>, _>>()?;
    let green_dev = green.iter().map(|v| spread(v)).fold(0.0, f64::max);

    let det = correlator_det(&sp, &cfg)?;
    let fused = delta_correlator_fused(&sp, &cfg)?;
    let corr_dev = spread(&[det, fused]);

    let loc = Localization::default_for(&cfg);
    let collapsed = tau_collapsed(&sp, &cfg)?;
    let via_m = tau_via_m(&sp, &loc, &cfg)?;
    let cross = tau_via_cross_ratio(&sp, &loc, &cfg)?;
    let (_, from_corr) = fin_check(&sp, &cfg)?;
    let tau_dev = spread(&[collapsed, via_m, cross, from_corr]);

    let max_dev = green_dev.max(corr_dev).max(tau_dev);
    let pass = max_dev < CROSSCHECK_TOL;
    let points: Vec<Value> = cfg.pairs().map(|(a, v)| json!({ "a": a, "V": v })).collect();
    let report = json!({
        "seed": seed,
        "m_re": sp.m().re,
        "m_im": sp.m().im,
        "points": points,
        "green": {
            "grid": axis,
            "routes": ["krein", "transfer", "fields"],
            "values": green.iter().map(|v| v.iter().map(|&z| complex(z)).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "max_rel_deviation": green_dev,
        },
        "correlator": {
            "determinant": complex(det),
            "fusion": complex(fused),
            "max_rel_deviation": corr_dev,
        },
        "tau": {
            "collapsed": complex(collapsed),
            "via_m": complex(via_m),
            "cross_ratio": complex(cross),
            "from_correlator": complex(from_corr),
            "max_rel_deviation": tau_dev,
        },
        "max_rel_deviation": max_dev,
        "tolerance": CROSSCHECK_TOL,
        "pass": pass,
    });
    let out = json_line(&report);
    if pass {
        Ok(out)
    } else {
        Err(Failure::CheckFailed(out))
    }
}

pub fn gaussian_check(
    common: &Common,
    field: FieldArg,
    dim_a: usize,
    dim_b: usize,
    samples: usize,
    pool: &rayon::ThreadPool,
) -> Result<String, Failure> {
    json_only(common, "gaussian-check")?;
    if dim_a == 0 || dim_a + dim_b > 4 {
        return Err(Error::InvalidInput(format!("need 1 <= dim-a and dim-a + dim-b <= 4, got {dim_a} + {dim_b}")).into());
    }
    let seed = common.seed.unwrap_or(DEFAULT_MC_SEED);
    let field = match field {
        FieldArg::Real => Field::Real,
        FieldArg::Complex => Field::Complex,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = random_form(&mut rng, field, dim_a, dim_b, true);
    let d = schur_determinants(&q)?;
    let schur = d.residual() / d.joint.norm();
    let krein = if dim_b > 0 { krein_residual(&q)? } else { 0.0 };
    let mc = pool.install(|| moment_check_mc(&q, samples, seed))?;
    let checks: Vec<Value> = mc
        .checks
        .iter()
        .map(|c| {
            json!({
                "name": c.name,
                "estimate": c.estimate,
                "expected": c.expected,
                "std_error": c.std_error,
                "z": c.z_score(),
            })
        })
        .collect();
    let flagged = mc.flagged(MC_FLAG_SIGMA).len();
    let pass = schur < 1e-10 && krein < 1e-10 && flagged == 0;
    let out = json_line(&json!({
        "field": if field == Field::Real { "real" } else { "complex" },
        "seed": seed,
        "samples": mc.samples,
        "dim_a": dim_a,
        "dim_b": dim_b,
        "schur_rel_residual": schur,
        "krein_rel_residual": krein,
        "checks": checks,
        "max_z": mc.max_z_score(),
        "flag_sigma": MC_FLAG_SIGMA,
        "flagged": flagged,
        "pass": pass,
    }));
    if pass {
        Ok(out)
    } else {
        Err(Failure::CheckFailed(out))
    }
}
