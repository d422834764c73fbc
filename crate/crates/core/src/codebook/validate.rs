use std::fmt;

use super::{codebook_mse_factor, BaseKind, GroupTopology, TrainingCodebook};
use crate::linalg::{kron, scaled_unitary_violation, CMatrix};

/// Absolute tolerance on `tr((Phi Phi^H)^{-1}) - Mbar`.
pub const MSE_FACTOR_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct ConstraintCheck {
    pub name: &'static str,
    pub violation: f64,
    pub tolerance: f64,
    /// Informational checks are reported but never fail the report.
    pub enforced: bool,
}

impl ConstraintCheck {
    pub fn passed(&self) -> bool {
        !self.enforced || self.violation <= self.tolerance
    }
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub topology: GroupTopology,
    pub kind: BaseKind,
    pub t_slots: usize,
    pub mse_factor: Option<f64>,
    pub checks: Vec<ConstraintCheck>,
    pub notes: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(ConstraintCheck::passed)
    }

    pub fn check(&self, name: &str) -> Option<&ConstraintCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "codebook kind={} G={} M_bar={} T={}",
            self.kind,
            self.topology.g(),
            self.topology.m_bar(),
            self.t_slots
        )?;
        for c in &self.checks {
            let status = match (c.enforced, c.passed()) {
                (false, _) => "info",
                (true, true) => "ok",
                (true, false) => "FAIL",
            };
            writeln!(
                f,
                "  [{status:>4}] {:<44} max violation {:.3e} (tol {:.0e})",
                c.name, c.violation, c.tolerance
            )?;
        }
        if let Some(v) = self.mse_factor {
            writeln!(
                f,
                "  tr((Phi Phi^H)^-1) = {v:.12} (lower bound {})",
                self.topology.m_bar()
            )?;
        }
        for note in &self.notes {
            writeln!(f, "  note: {note}")?;
        }
        write!(f, "  result: {}", if self.passed() { "PASS" } else { "FAIL" })
    }
}

/// Runs every training-matrix constraint and reports the worst violation of
/// each. Gram and factor checks are enforced only for DFT/Hadamard codebooks.
pub fn validate_codebook(cb: &TrainingCodebook, tol: f64) -> ValidationReport {
    let top = *cb.topology();
    let kind = cb.kind();
    let orthogonal = kind.is_orthogonal();
    let phi = cb.phi_hat();
    let m = top.m() as f64;
    let mut checks = Vec::new();
    let mut notes = Vec::new();

    let block_violation = (0..cb.t_slots())
        .flat_map(|t| cb.slot_matrices(t).expect("slot index in range"))
        .map(|b| scaled_unitary_violation(&b, 1.0))
        .fold(0.0, f64::max);
    checks.push(ConstraintCheck {
        name: "every slot block is unitary",
        violation: block_violation,
        tolerance: tol,
        enforced: true,
    });

    let row_gram = phi.matmul_adjoint(phi);
    checks.push(ConstraintCheck {
        name: "Phi Phi^H = M I",
        violation: row_gram.max_abs_diff(&CMatrix::identity(row_gram.rows()).scale_real(m)),
        tolerance: tol,
        enforced: orthogonal,
    });
    if phi.is_square() {
        checks.push(ConstraintCheck {
            name: "Phi^H Phi = M I",
            violation: scaled_unitary_violation(phi, m),
            tolerance: tol,
            enforced: orthogonal,
        });
    }

    let mse_factor = codebook_mse_factor(cb);
    let (violation, factor) = match &mse_factor {
        Ok(v) => ((v - top.m_bar() as f64).abs(), Some(*v)),
        Err(e) => {
            notes.push(format!("training matrix is not full row rank: {e}"));
            (f64::INFINITY, None)
        }
    };
    checks.push(ConstraintCheck {
        name: "full row rank",
        violation: if factor.is_some() { 0.0 } else { f64::INFINITY },
        tolerance: 0.0,
        enforced: true,
    });
    checks.push(ConstraintCheck {
        name: "tr((Phi Phi^H)^-1) attains M_bar",
        violation,
        tolerance: MSE_FACTOR_TOL,
        enforced: orthogonal,
    });

    if orthogonal {
        if cb.t_slots() == top.t_min() {
            checks.extend(kronecker_checks(cb, tol));
        } else {
            notes.push("training length differs from G*M_bar^2; Kronecker factor checks skipped".into());
        }
    } else if let Some(v) = factor {
        notes.push(format!(
            "random baseline: MSE factor exceeds the bound by {:.4}x",
            v / top.m_bar() as f64
        ));
    }

    if top.is_single_connected() {
        notes.push(format!(
            "M_bar = 1 (single-connected): the training matrix reduces to the conventional-RIS {} pattern",
            match kind {
                BaseKind::Dft => "G-point DFT",
                BaseKind::Hadamard => "Hadamard",
                BaseKind::RandomUnitary => "random-phase",
            }
        ));
    }
    if top.is_fully_connected() && !top.is_single_connected() {
        notes.push("G = 1 (fully-connected): the training matrix is Phibar itself".into());
    }

    ValidationReport {
        topology: top,
        kind,
        t_slots: cb.t_slots(),
        mse_factor: factor,
        checks,
        notes,
    }
}

/// Recovers `X` and `Phibar` from the matrix itself, taking the leading block
/// as `Phibar` (so `X[0,0] = 1`), and checks each factor's constraints.
fn kronecker_checks(cb: &TrainingCodebook, tol: f64) -> Vec<ConstraintCheck> {
    let top = cb.topology();
    let (g, m_bar, len) = (top.g(), top.m_bar(), top.block_len());
    let phi = cb.phi_hat();
    let block = |gi: usize, gj: usize| CMatrix::from_fn(len, len, |i, j| phi[(gi * len + i, gj * len + j)]);

    let phibar = block(0, 0);
    let energy = phibar.frobenius_norm_sqr();
    let x = CMatrix::from_fn(g, g, |gi, gj| {
        let b = block(gi, gj);
        let inner: num_complex::Complex64 = phibar
            .as_slice()
            .iter()
            .zip(b.as_slice())
            .map(|(p, q)| p.conj() * q)
            .sum();
        inner / energy
    });

    let x_gram = x.matmul_adjoint(&x);
    let phibar_gram = phibar.matmul_adjoint(&phibar);
    let column_blocks = (0..len)
        .map(|j| {
            let b = CMatrix::from_column_major(m_bar, m_bar, phibar.column(j).to_vec()).expect("Mbar^2 entries");
            scaled_unitary_violation(&b, 1.0)
        })
        .fold(0.0, f64::max);

    vec![
        ConstraintCheck {
            name: "X X^H = G I",
            violation: x_gram.max_abs_diff(&CMatrix::identity(g).scale_real(g as f64)),
            tolerance: tol,
            enforced: true,
        },
        ConstraintCheck {
            name: "|X[g,g']| = 1",
            violation: x.as_slice().iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max),
            tolerance: tol,
            enforced: true,
        },
        ConstraintCheck {
            name: "Phibar Phibar^H = M_bar I",
            violation: phibar_gram.max_abs_diff(&CMatrix::identity(len).scale_real(m_bar as f64)),
            tolerance: tol,
            enforced: true,
        },
        ConstraintCheck {
            name: "every Phibar column reshapes to a unitary",
            violation: column_blocks,
            tolerance: tol,
            enforced: true,
        },
        ConstraintCheck {
            name: "Phi = X kron Phibar",
            violation: phi.max_abs_diff(&kron(&x, &phibar)),
            tolerance: tol,
            enforced: true,
        },
    ]
}
