//! The `verify` identity suites.

use clap::ValueEnum;
use qbf_core::expansions::ClosedFormExpansion;
use qbf_core::qbessel::{check_difference_relation, check_shift_identity};
use qbf_core::qcore::check_q_integration_by_parts;
use qbf_core::qpoly::{check_factorization, check_finite_sum_identities, check_polynomial_agreement};
use qbf_core::series::{check_coefficient_integral_identity, eta_norm_report, orthogonality_report};
use qbf_core::zeros::{check_derivative_asymptotics, check_zero_value_bound, jacobi_identity_residual};
use qbf_core::{GridFunction, QContext, ZeroCache};

use crate::output::{Cell, Report, Table};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Family {
    Jacobi,
    Difference,
    Shift,
    Zeros,
    ZeroBound,
    DerivativeFloor,
    Orthogonality,
    Eta,
    Polynomials,
    Factorization,
    FiniteSums,
    CoefficientIdentity,
    IntegrationByParts,
}

impl Family {
    pub fn name(self) -> String {
        self.to_possible_value().expect("no skipped variants").get_name().to_string()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Relation {
    AtMost,
    AtLeast,
}

struct Outcome {
    measure: &'static str,
    value: f64,
    relation: Relation,
    limit: f64,
}

impl Outcome {
    fn at_most(measure: &'static str, value: f64, limit: f64) -> Self {
        Self { measure, value, relation: Relation::AtMost, limit }
    }

    fn pass(&self) -> bool {
        match self.relation {
            Relation::AtMost => self.value <= self.limit,
            Relation::AtLeast => self.value >= self.limit,
        }
    }
}

pub struct VerifyParams {
    pub k_max: usize,
    pub seed: u64,
}

impl VerifyParams {
    pub fn seeds(&self) -> Vec<u64> {
        (0..5).map(|i| self.seed.wrapping_add(i)).collect()
    }
}

fn run(family: Family, ctx: &QContext, p: &VerifyParams) -> qbf_core::Result<Outcome> {
    let k_max = p.k_max.max(1);
    Ok(match family {
        Family::Jacobi => Outcome::at_most("absolute", jacobi_identity_residual(ctx.q())?, 1e-13),
        Family::Difference => {
            let mut worst = 0.0f64;
            for x in [0.25, 0.5, 1.0, 2.0, 4.0] {
                let r = check_difference_relation(ctx, x)?;
                worst = worst.max(r.residual / r.bound);
            }
            Outcome::at_most("residual/bound", worst, 1.0)
        }
        Family::Shift => {
            let mut worst = 0.0f64;
            for k in 1..=k_max {
                let r = check_shift_identity(ctx, k)?;
                worst = worst.max(r.residual / r.bound);
            }
            Outcome::at_most("residual/bound", worst, 1.0)
        }
        Family::Zeros => {
            let ks: Vec<usize> = (1..=k_max).collect();
            let zeros = ZeroCache::shared(ctx).many(&ks)?;
            let bad = zeros.iter().filter(|z| z.in_regime && !z.certified).count();
            Outcome::at_most("uncertified in-regime zeros", bad as f64, 0.0)
        }
        Family::ZeroBound => {
            let mut worst = f64::NEG_INFINITY;
            for k in 3..=k_max.max(3) {
                let b = check_zero_value_bound(ctx, k)?;
                worst = worst.max(b.lhs_log2 - b.rhs_log2);
            }
            Outcome::at_most("log2(lhs/rhs)", worst, 0.0)
        }
        Family::DerivativeFloor => {
            let r = check_derivative_asymptotics(ctx, 3..=k_max.max(4))?;
            Outcome { measure: "min|S|/max|S|", value: r.min_abs_s / r.max_abs_s, relation: Relation::AtLeast, limit: 0.1 }
        }
        Family::Orthogonality => {
            Outcome::at_most("relative off-diagonal", orthogonality_report(ctx, k_max)?.max_off_diagonal, 1e-10)
        }
        Family::Eta => {
            let mut worst = orthogonality_report(ctx, k_max)?.max_diagonal_gap;
            for k in 1..=k_max {
                worst = worst.max(eta_norm_report(ctx, k)?.max_relative_gap);
            }
            Outcome::at_most("relative", worst, 1e-9)
        }
        Family::Polynomials => {
            let a = check_polynomial_agreement(ctx, 12);
            Outcome::at_most("relative", a.max().max(a.boundary_values), 1e-12)
        }
        Family::Factorization => {
            let mut worst = 0.0f64;
            for n in 0..=6 {
                for k in 1..=5 {
                    let r = check_factorization(ctx, n, k)?;
                    if r.bound > 0.0 {
                        worst = worst.max(r.residual / r.bound);
                    } else if r.residual > 0.0 {
                        worst = f64::INFINITY;
                    }
                }
            }
            Outcome::at_most("residual/bound", worst, 1.0)
        }
        Family::FiniteSums => {
            let r = check_finite_sum_identities(ctx.q(), ctx.nu(), 12, &p.seeds())?;
            Outcome::at_most("relative", r.max_residual(), 1e-12)
        }
        Family::CoefficientIdentity => {
            let prec = ctx.min_prec() + 64;
            let power = ClosedFormExpansion::power_nu(ctx)?.grid_function(ctx.depth(), prec)?;
            let constant = GridFunction::power(ctx, ctx.depth(), prec, 0.0)?;
            let mut worst = 0.0f64;
            for f in [&power, &constant] {
                for k in 1..=k_max.min(4) {
                    worst = worst.max(check_coefficient_integral_identity(ctx, f, k)?.relative);
                }
            }
            Outcome::at_most("relative", worst, 1e-9)
        }
        Family::IntegrationByParts => {
            let mut worst = 0.0f64;
            for (a, b) in [(0.0, 1.0), (0.25, 1.0)] {
                let r = check_q_integration_by_parts(ctx, |x| x * x, |x| x * x * x + 1.0, a, b)?;
                worst = worst.max(r.residual / r.bound);
            }
            Outcome::at_most("residual/bound", worst, 1.0)
        }
    })
}

/// Runs the requested families (all when empty) in a fixed order.
pub fn verify(ctx: &QContext, families: &[Family], p: &VerifyParams) -> (Report, bool) {
    let mut list: Vec<Family> =
        if families.is_empty() { Family::value_variants().to_vec() } else { families.to_vec() };
    list.sort();
    list.dedup();
    let mut table = Table::new("families", &["family", "measure", "value", "relation", "limit", "pass", "error"]);
    let mut all = true;
    for fam in list {
        let row = match run(fam, ctx, p) {
            Ok(o) => {
                let pass = o.pass();
                all &= pass;
                let rel = if o.relation == Relation::AtMost { "<=" } else { ">=" };
                vec![fam.name().into(), o.measure.into(), o.value.into(), rel.into(), o.limit.into(), pass.into(), Cell::Null]
            }
            Err(e) => {
                all = false;
                vec![fam.name().into(), Cell::Null, Cell::Null, Cell::Null, Cell::Null, false.into(), e.to_string().into()]
            }
        };
        table.push(row);
    }
    let report = Report::single(table)
        .meta("q", ctx.q())
        .meta("nu", ctx.nu())
        .meta("kmax", p.k_max)
        .meta("seed", p.seed)
        .meta("seeds", p.seeds())
        .meta("pass", all);
    (report, all)
}
