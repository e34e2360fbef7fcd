use super::{Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Denominator floor for relative error, so near-zero gradients are compared
/// against an absolute scale instead of amplifying rounding noise.
const REL_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct GroupCheck {
    pub name: String,
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub tolerance: f64,
    pub groups: Vec<GroupCheck>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.groups.iter().all(|g| g.passed)
    }

    pub fn worst(&self) -> f64 {
        self.groups.iter().map(|g| g.max_rel_error).fold(0.0, f64::max)
    }
}

fn evaluate<T: Scalar, F>(params: &[(String, Tensor<T>)], track: bool, f: &mut F) -> Result<(Tape<T>, Vec<Var>, Var)>
where
    F: FnMut(&mut Tape<T>, &[Var]) -> Result<Var>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = params
        .iter()
        .map(|(_, t)| if track { tape.param(t) } else { tape.constant(t.detached()) })
        .collect();
    let loss = f(&mut tape, &vars)?;
    if tape.value(loss).numel() != 1 {
        return Err(Error::contract("gradient check needs a scalar-valued function"));
    }
    Ok((tape, vars, loss))
}

/// Compares reverse-mode gradients of `f` against central differences with step `h`.
///
/// `f` receives the tape and one [`Var`] per entry of `params` and returns a
/// scalar. It must be deterministic (no active dropout).
pub fn finite_diff_check<T: Scalar, F>(
    params: &[(String, Tensor<T>)],
    h: f64,
    tol: f64,
    mut f: F,
) -> Result<GradCheckReport>
where
    F: FnMut(&mut Tape<T>, &[Var]) -> Result<Var>,
{
    let (tape, vars, loss) = evaluate(params, true, &mut f)?;
    let grads = tape.backward(loss)?;
    let analytic: Vec<Vec<f64>> = vars
        .iter()
        .zip(params)
        .map(|(&v, (_, t))| match grads.get(v) {
            Some(g) => g.iter().map(|x| x.as_f64()).collect(),
            None => vec![0.0; t.numel()],
        })
        .collect();
    drop(tape);

    let mut work: Vec<(String, Tensor<T>)> = params.iter().map(|(n, t)| (n.clone(), t.detached())).collect();
    let mut groups = Vec::with_capacity(params.len());
    for (gi, analytic) in analytic.iter().enumerate() {
        let mut max_rel = 0.0f64;
        let mut max_abs = 0.0f64;
        for (ei, &a) in analytic.iter().enumerate() {
            let original = work[gi].1.data()[ei];
            work[gi].1.data_mut()[ei] = original + T::lit(h);
            let (t, _, l) = evaluate(&work, false, &mut f)?;
            let plus = t.value(l).data()[0].as_f64();
            work[gi].1.data_mut()[ei] = original - T::lit(h);
            let (t, _, l) = evaluate(&work, false, &mut f)?;
            let minus = t.value(l).data()[0].as_f64();
            work[gi].1.data_mut()[ei] = original;

            let numeric = (plus - minus) / (2.0 * h);
            let abs = (a - numeric).abs();
            let rel = abs / a.abs().max(numeric.abs()).max(REL_FLOOR);
            max_abs = max_abs.max(abs);
            max_rel = max_rel.max(rel);
        }
        groups.push(GroupCheck {
            name: params[gi].0.clone(),
            max_rel_error: max_rel,
            max_abs_error: max_abs,
            passed: max_rel < tol,
        });
    }
    Ok(GradCheckReport { tolerance: tol, groups })
}
