//! Pauli operators and the two contextuality tables: the 3×3 magic square on
//! two qubits and the ten-observable magic star (Mermin pentagram) on three
//! qubits.
//!
//! Context member order is significant downstream: it is the order in which
//! the sequential measurement is performed.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, I, ONE, ZERO};

/// Tolerance for the structural checks on the built-in tables. Entries are
/// exact 0/±1/±i so this is far looser than needed.
pub const TABLE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PauliAxis {
    #[serde(rename = "id")]
    Id,
    X,
    Y,
    Z,
}

impl PauliAxis {
    pub fn symbol(self) -> char {
        match self {
            PauliAxis::Id => 'I',
            PauliAxis::X => 'X',
            PauliAxis::Y => 'Y',
            PauliAxis::Z => 'Z',
        }
    }
}

impl FromStr for PauliAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(PauliAxis::X),
            "y" => Ok(PauliAxis::Y),
            "z" => Ok(PauliAxis::Z),
            "id" | "i" => Ok(PauliAxis::Id),
            _ => Err(Error::UnknownAxis(s.to_string())),
        }
    }
}

/// The 2×2 Pauli matrix (or identity) for `axis`.
pub fn pauli(axis: PauliAxis) -> ComplexMatrix {
    let entries = match axis {
        PauliAxis::Id => vec![ONE, ZERO, ZERO, ONE],
        PauliAxis::X => vec![ZERO, ONE, ONE, ZERO],
        PauliAxis::Y => vec![ZERO, -I, I, ZERO],
        PauliAxis::Z => vec![ONE, ZERO, ZERO, -ONE],
    };
    ComplexMatrix::new(2, entries).expect("2x2 literal")
}

/// Parses an axis label (`x`, `y`, `z`, `id`) and returns its matrix.
pub fn pauli_from_label(label: &str) -> Result<ComplexMatrix> {
    Ok(pauli(label.parse()?))
}

/// A dichotomic (±1-valued) observable given as a tensor product of Paulis.
#[derive(Clone, PartialEq)]
pub struct Observable {
    label: String,
    factors: Vec<PauliAxis>,
    matrix: ComplexMatrix,
}

impl Observable {
    pub fn from_factors(label: impl Into<String>, factors: &[PauliAxis]) -> Self {
        assert!(!factors.is_empty(), "observable needs at least one factor");
        let matrix = factors
            .iter()
            .skip(1)
            .fold(pauli(factors[0]), |acc, &ax| acc.tensor(&pauli(ax)));
        Self {
            label: label.into(),
            factors: factors.to_vec(),
            matrix,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn factors(&self) -> &[PauliAxis] {
        &self.factors
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Tensor factors as a string like `"YZ"` or `"XII"`.
    pub fn factor_string(&self) -> String {
        self.factors.iter().map(|a| a.symbol()).collect()
    }

    /// Hermitian involution check.
    pub fn is_dichotomic(&self, tol: f64) -> bool {
        self.matrix.is_hermitian(tol) && self.matrix.is_involution(tol)
    }
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.label, self.factor_string())
    }
}

/// Projector onto the eigenspace selected by `outcome`: bit 0 is the +1
/// eigenvalue, bit 1 the −1 eigenvalue. Returns `(I ± M)/2`.
pub fn projector(o: &Observable, outcome: u8) -> ComplexMatrix {
    debug_assert!(outcome <= 1, "outcome must be a bit");
    let id = ComplexMatrix::identity(o.dim());
    let signed = o.matrix.scale_real(if outcome == 0 { 1.0 } else { -1.0 });
    (&id + &signed).scale_real(0.5)
}

/// An ordered set of mutually commuting observables whose product is
/// `expected_product_sign · I`.
#[derive(Debug, Clone)]
pub struct MeasurementContext {
    label: String,
    members: Vec<Observable>,
    expected_product_sign: i8,
}

impl MeasurementContext {
    /// Builds the context and checks commutation and the product rule.
    pub fn new(
        label: impl Into<String>,
        members: Vec<Observable>,
        expected_product_sign: i8,
        tol: f64,
    ) -> Result<Self> {
        let ctx = Self {
            label: label.into(),
            members,
            expected_product_sign,
        };
        ctx.validate(tol)?;
        Ok(ctx)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn members(&self) -> &[Observable] {
        &self.members
    }

    pub fn expected_product_sign(&self) -> i8 {
        self.expected_product_sign
    }

    /// Ordered matrix product of all members.
    pub fn product(&self) -> Result<ComplexMatrix> {
        ComplexMatrix::product(self.members.iter().map(Observable::matrix))
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let invalid = |reason: String| Error::InvalidContext {
            label: self.label.clone(),
            reason,
        };
        if self.members.is_empty() {
            return Err(invalid("no members".into()));
        }
        if self.expected_product_sign.abs() != 1 {
            return Err(invalid(format!(
                "product sign {} is not ±1",
                self.expected_product_sign
            )));
        }
        for (i, a) in self.members.iter().enumerate() {
            if !a.is_dichotomic(tol) {
                return Err(invalid(format!("{} is not a Hermitian involution", a.label)));
            }
            for b in &self.members[i + 1..] {
                if !a.matrix.commutes_with(&b.matrix, tol)? {
                    return Err(Error::NonCommuting(a.label.clone(), b.label.clone()));
                }
            }
        }
        let dim = self.members[0].dim();
        let expected =
            ComplexMatrix::identity(dim).scale_real(f64::from(self.expected_product_sign));
        if !self.product()?.approx_eq(&expected, tol)? {
            return Err(invalid(format!(
                "ordered product is not {:+}I",
                self.expected_product_sign
            )));
        }
        Ok(())
    }
}

/// Mermin's magic square on two qubits.
///
/// Grid layout (row, column), with A/B/C naming the observable selected by
/// the game inputs x/y/z:
///
/// ```text
///   C1 = Y⊗Z   B1 = Z⊗Y   A1 = X⊗X
///   A2 = Z⊗X   C2 = X⊗Z   B2 = Y⊗Y
///   B3 = X⊗Y   A3 = Y⊗X   C3 = Z⊗Z
/// ```
///
/// Rows multiply to +I, columns to −I.
#[derive(Debug, Clone)]
pub struct MagicSquare {
    grid: [[Observable; 3]; 3],
    rows: [MeasurementContext; 3],
    columns: [MeasurementContext; 3],
}

impl MagicSquare {
    pub fn new() -> Self {
        use PauliAxis::{X, Y, Z};
        let o = Observable::from_factors;
        let grid = [
            [o("C1", &[Y, Z]), o("B1", &[Z, Y]), o("A1", &[X, X])],
            [o("A2", &[Z, X]), o("C2", &[X, Z]), o("B2", &[Y, Y])],
            [o("B3", &[X, Y]), o("A3", &[Y, X]), o("C3", &[Z, Z])],
        ];
        let row = |i: usize| {
            MeasurementContext::new(format!("R{}", i + 1), grid[i].to_vec(), 1, TABLE_TOL)
                .expect("magic-square row is a valid context")
        };
        let col = |j: usize| {
            let members = (0..3).map(|i| grid[i][j].clone()).collect();
            MeasurementContext::new(format!("L{}", j + 1), members, -1, TABLE_TOL)
                .expect("magic-square column is a valid context")
        };
        let rows = [row(0), row(1), row(2)];
        let columns = [col(0), col(1), col(2)];
        Self {
            grid,
            rows,
            columns,
        }
    }

    pub fn grid(&self) -> &[[Observable; 3]; 3] {
        &self.grid
    }

    pub fn rows(&self) -> &[MeasurementContext; 3] {
        &self.rows
    }

    pub fn columns(&self) -> &[MeasurementContext; 3] {
        &self.columns
    }

    /// R1, R2, R3, L1, L2, L3.
    pub fn contexts(&self) -> impl Iterator<Item = &MeasurementContext> {
        self.rows.iter().chain(self.columns.iter())
    }

    /// All nine observables in row-major grid order.
    pub fn observables(&self) -> impl Iterator<Item = &Observable> {
        self.grid.iter().flatten()
    }

    pub fn observable(&self, label: &str) -> Option<&Observable> {
        self.observables().find(|o| o.label == label)
    }

    fn lettered(&self, letter: char, index: u8) -> &Observable {
        let label = format!("{letter}{index}");
        self.observable(&label)
            .unwrap_or_else(|| panic!("no observable {label} (index must be 1..=3)"))
    }

    /// A_x for x in 1..=3.
    pub fn a(&self, x: u8) -> &Observable {
        self.lettered('A', x)
    }

    /// B_y for y in 1..=3.
    pub fn b(&self, y: u8) -> &Observable {
        self.lettered('B', y)
    }

    /// C_z for z in 1..=3.
    pub fn c(&self, z: u8) -> &Observable {
        self.lettered('C', z)
    }
}

impl Default for MagicSquare {
    fn default() -> Self {
        Self::new()
    }
}

/// Mermin's pentagram on three qubits: ten observables on five edges of four.
///
/// ```text
///   E1 = {XXX, XYY, YXY, YYX}   product −I
///   E2 = {X1, X2, X3, XXX}      product +I
///   E3 = {X1, Y2, Y3, XYY}      product +I
///   E4 = {Y1, X2, Y3, YXY}      product +I
///   E5 = {Y1, Y2, X3, YYX}      product +I
/// ```
///
/// `X1` is σx on the first qubit, and so on. Every observable lies on
/// exactly two edges.
#[derive(Debug, Clone)]
pub struct MagicStar {
    observables: Vec<Observable>,
    edges: Vec<MeasurementContext>,
}

impl MagicStar {
    pub fn new() -> Self {
        use PauliAxis::{Id, X, Y};
        let o = Observable::from_factors;
        let observables = vec![
            o("X1", &[X, Id, Id]),
            o("X2", &[Id, X, Id]),
            o("X3", &[Id, Id, X]),
            o("Y1", &[Y, Id, Id]),
            o("Y2", &[Id, Y, Id]),
            o("Y3", &[Id, Id, Y]),
            o("XXX", &[X, X, X]),
            o("XYY", &[X, Y, Y]),
            o("YXY", &[Y, X, Y]),
            o("YYX", &[Y, Y, X]),
        ];
        let pick = |labels: &[&str]| -> Vec<Observable> {
            labels
                .iter()
                .map(|l| {
                    observables
                        .iter()
                        .find(|o| o.label == *l)
                        .expect("label in table")
                        .clone()
                })
                .collect()
        };
        let layout: [(&str, [&str; 4], i8); 5] = [
            ("E1", ["XXX", "XYY", "YXY", "YYX"], -1),
            ("E2", ["X1", "X2", "X3", "XXX"], 1),
            ("E3", ["X1", "Y2", "Y3", "XYY"], 1),
            ("E4", ["Y1", "X2", "Y3", "YXY"], 1),
            ("E5", ["Y1", "Y2", "X3", "YYX"], 1),
        ];
        let edges = layout
            .iter()
            .map(|(label, members, sign)| {
                MeasurementContext::new(*label, pick(members), *sign, TABLE_TOL)
                    .expect("pentagram edge is a valid context")
            })
            .collect();
        Self { observables, edges }
    }

    pub fn observables(&self) -> &[Observable] {
        &self.observables
    }

    pub fn edges(&self) -> &[MeasurementContext] {
        &self.edges
    }

    /// Edge by 1-based index.
    pub fn edge(&self, j: usize) -> &MeasurementContext {
        &self.edges[j - 1]
    }
}

impl Default for MagicStar {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ObservableEntry {
    pub label: String,
    pub factors: String,
    pub contexts: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContextEntry {
    pub label: String,
    pub members: Vec<String>,
    pub product_sign: i8,
}

#[derive(Debug, Clone, Serialize)]
pub struct TableExport {
    pub qubits: usize,
    pub observables: Vec<ObservableEntry>,
    pub contexts: Vec<ContextEntry>,
}

/// JSON-friendly summary of both tables.
#[derive(Debug, Clone, Serialize)]
pub struct TablesDocument {
    pub magic_square: TableExport,
    pub magic_star: TableExport,
}

fn export<'a>(
    qubits: usize,
    observables: impl Iterator<Item = &'a Observable>,
    contexts: &[&MeasurementContext],
) -> TableExport {
    let observables = observables
        .map(|o| ObservableEntry {
            label: o.label.clone(),
            factors: o.factor_string(),
            contexts: contexts
                .iter()
                .filter(|c| c.members.iter().any(|m| m.label == o.label))
                .map(|c| c.label.clone())
                .collect(),
        })
        .collect();
    let contexts = contexts
        .iter()
        .map(|c| ContextEntry {
            label: c.label.clone(),
            members: c.members.iter().map(|m| m.label.clone()).collect(),
            product_sign: c.expected_product_sign,
        })
        .collect();
    TableExport {
        qubits,
        observables,
        contexts,
    }
}

impl TablesDocument {
    pub fn build(square: &MagicSquare, star: &MagicStar) -> Self {
        let sq_ctx: Vec<_> = square.contexts().collect();
        let st_ctx: Vec<_> = star.edges().iter().collect();
        Self {
            magic_square: export(2, square.observables(), &sq_ctx),
            magic_star: export(3, star.observables().iter(), &st_ctx),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_definitions() {
        assert_eq!(
            pauli(PauliAxis::Z),
            ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]])
        );
        assert_eq!(
            pauli(PauliAxis::X),
            ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
        );
        let y = pauli(PauliAxis::Y);
        assert_eq!(y[(0, 1)], -I);
        assert_eq!(y[(1, 0)], I);
        assert_eq!(y[(0, 0)], ZERO);
        assert_eq!(pauli(PauliAxis::Id), ComplexMatrix::identity(2));
    }

    #[test]
    fn pauli_label_parsing() {
        assert_eq!(pauli_from_label("x").unwrap(), pauli(PauliAxis::X));
        assert_eq!(pauli_from_label("id").unwrap(), ComplexMatrix::identity(2));
        assert!(matches!(pauli_from_label("w"), Err(Error::UnknownAxis(_))));
    }

    #[test]
    fn square_grid_matches_layout() {
        let sq = MagicSquare::new();
        let g = sq.grid();
        assert_eq!(g[0][0].label(), "C1");
        assert_eq!(g[0][0].factor_string(), "YZ");
        assert_eq!(g[0][2].label(), "A1");
        assert_eq!(g[0][2].factor_string(), "XX");
        assert_eq!(g[1][2].label(), "B2");
        assert_eq!(g[1][2].factor_string(), "YY");
        assert_eq!(sq.a(2).factor_string(), "ZX");
        assert_eq!(sq.b(3).factor_string(), "XY");
        assert_eq!(sq.c(3).factor_string(), "ZZ");
    }

    #[test]
    fn square_context_products() {
        let sq = MagicSquare::new();
        let r1 = &sq.rows()[0];
        let names: Vec<_> = r1.members().iter().map(|o| o.label()).collect();
        assert_eq!(names, ["C1", "B1", "A1"]);
        assert_eq!(r1.product().unwrap(), ComplexMatrix::identity(4));
        let l1 = &sq.columns()[0];
        let names: Vec<_> = l1.members().iter().map(|o| o.label()).collect();
        assert_eq!(names, ["C1", "A2", "B3"]);
        assert_eq!(l1.product().unwrap(), ComplexMatrix::identity(4).scale_real(-1.0));
        for c in sq.contexts() {
            c.validate(TABLE_TOL).unwrap();
        }
    }

    #[test]
    fn square_observables_are_traceless_involutions() {
        for o in MagicSquare::new().observables() {
            assert!(o.is_dichotomic(TABLE_TOL), "{o:?}");
            assert!(o.matrix().trace().norm() <= TABLE_TOL);
        }
    }

    #[test]
    fn star_edge_products_and_incidence() {
        let star = MagicStar::new();
        assert_eq!(star.observables().len(), 10);
        assert_eq!(
            star.edge(1).product().unwrap(),
            ComplexMatrix::identity(8).scale_real(-1.0)
        );
        for j in 2..=5 {
            assert_eq!(star.edge(j).product().unwrap(), ComplexMatrix::identity(8));
        }
        for o in star.observables() {
            let count = star
                .edges()
                .iter()
                .filter(|e| e.members().iter().any(|m| m.label() == o.label()))
                .count();
            assert_eq!(count, 2, "{o:?}");
        }
    }

    #[test]
    fn projector_properties() {
        let z = Observable::from_factors("Z", &[PauliAxis::Z]);
        assert_eq!(
            projector(&z, 0),
            ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]])
        );
        for o in MagicSquare::new()
            .observables()
            .chain(MagicStar::new().observables())
        {
            let p0 = projector(o, 0);
            let p1 = projector(o, 1);
            let id = ComplexMatrix::identity(o.dim());
            assert!((&p0 + &p1).approx_eq(&id, 0.0).unwrap());
            assert!(p0.mul(&p1).unwrap().is_zero(TABLE_TOL));
            for p in [&p0, &p1] {
                assert!(p.mul(p).unwrap().approx_eq(p, TABLE_TOL).unwrap());
                assert!(p.is_hermitian(0.0));
            }
        }
    }

    #[test]
    fn context_rejects_noncommuting_members() {
        let x = Observable::from_factors("X", &[PauliAxis::X]);
        let z = Observable::from_factors("Z", &[PauliAxis::Z]);
        let err = MeasurementContext::new("bad", vec![x, z], 1, TABLE_TOL).unwrap_err();
        assert!(matches!(err, Error::NonCommuting(_, _)));
    }

    #[test]
    fn context_rejects_wrong_sign() {
        let sq = MagicSquare::new();
        let members = sq.rows()[0].members().to_vec();
        assert!(matches!(
            MeasurementContext::new("R1?", members, -1, TABLE_TOL),
            Err(Error::InvalidContext { .. })
        ));
    }

    #[test]
    fn tables_document_membership() {
        let doc = TablesDocument::build(&MagicSquare::new(), &MagicStar::new());
        assert_eq!(doc.magic_square.observables.len(), 9);
        assert!(doc.magic_square.observables.iter().all(|o| o.contexts.len() == 2));
        let c1 = &doc.magic_square.observables[0];
        assert_eq!((c1.label.as_str(), c1.factors.as_str()), ("C1", "YZ"));
        assert_eq!(c1.contexts, ["R1", "L1"]);
        assert_eq!(doc.magic_star.contexts[0].product_sign, -1);
        let json = serde_json::to_value(&doc).unwrap();
        assert_eq!(json["magic_star"]["contexts"][1]["members"][3], "XXX");
    }
}
