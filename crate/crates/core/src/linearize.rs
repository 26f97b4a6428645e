//! Views an expression as a homogeneous linear form `sum_j c_j * v_j` in its
//! kernel monomials `v_j`, with parametric coefficient expressions `c_j`.

use crate::expr::{Expression, KernelMonomial, Term};

/// The terms of one kernel `v_j`: its parametric coefficient, `n_ij` terms long.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KernelBlock<'a> {
    pub kernel: &'a KernelMonomial,
    pub terms: &'a [Term],
}

impl KernelBlock<'_> {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Per-kernel grouping of an expression, borrowing its terms. Blocks are in
/// canonical kernel order; the constant kernel `1` comes first when present.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KernelPartition<'a> {
    blocks: Vec<KernelBlock<'a>>,
}

impl<'a> KernelPartition<'a> {
    pub fn blocks(&self) -> &[KernelBlock<'a>] {
        &self.blocks
    }

    pub fn kernel_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn term_count(&self) -> usize {
        self.blocks.iter().map(KernelBlock::len).sum()
    }

    /// `n_ij` for the given kernel, zero if absent.
    pub fn size_of(&self, kernel: &KernelMonomial) -> usize {
        self.block(kernel).map_or(0, |b| b.len())
    }

    pub fn block(&self, kernel: &KernelMonomial) -> Option<&KernelBlock<'a>> {
        self.blocks
            .binary_search_by(|b| b.kernel.cmp(kernel))
            .ok()
            .map(|i| &self.blocks[i])
    }

    /// Rebuilds `sum_j c_j * v_j` from the blocks.
    pub fn reassemble(&self) -> Expression {
        Expression::normalize(self.blocks.iter().flat_map(|b| b.terms.iter().cloned()).collect())
    }
}

pub fn partition(e: &Expression) -> KernelPartition<'_> {
    let terms = e.terms();
    let mut blocks = Vec::new();
    let mut start = 0;
    for i in 1..=terms.len() {
        if i == terms.len() || terms[i].kernel != terms[start].kernel {
            blocks.push(KernelBlock {
                kernel: &terms[start].kernel,
                terms: &terms[start..i],
            });
            start = i;
        }
    }
    KernelPartition { blocks }
}

/// Kernels present in both partitions, as `(block in p1, block in p2)`.
pub fn common_blocks<'a, 'b>(
    p1: &KernelPartition<'a>,
    p2: &KernelPartition<'b>,
) -> Vec<(KernelBlock<'a>, KernelBlock<'b>)> {
    let (a, b) = (p1.blocks(), p2.blocks());
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].kernel.cmp(b[j].kernel) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push((a[i], b[j]));
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Number of quotients the kernel-restricted scan computes: `sum_j n_1j * n_2j`.
pub fn shared_quotient_work(p1: &KernelPartition<'_>, p2: &KernelPartition<'_>) -> usize {
    common_blocks(p1, p2).iter().map(|(a, b)| a.len() * b.len()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expression, VariableTable};

    fn vars() -> VariableTable {
        VariableTable::new(&["x", "y"], &["f", "g"], &[]).unwrap()
    }

    #[test]
    fn eq4_partition() {
        let v = vars();
        let e = parse_expression("3*x + 3*cos(x)*f*d(g,x) - 12*x*y*g + 6*x*g - y*g + sin(d(g,y))", &v).unwrap();
        let p = partition(&e);
        let rendered: Vec<(String, usize)> = p.blocks().iter().map(|b| (b.kernel.to_string(), b.len())).collect();
        assert_eq!(
            rendered,
            [
                ("1".to_string(), 1),
                ("g".to_string(), 3),
                ("sin(d(g,y))".to_string(), 1),
                ("f*d(g,x)".to_string(), 1),
            ]
        );
        assert_eq!(p.reassemble(), e);
    }

    #[test]
    fn zero_partition() {
        let z = Expression::zero();
        assert_eq!(partition(&z).kernel_count(), 0);
    }

    #[test]
    fn worked_example_partition() {
        let v = vars();
        let e1 = parse_expression("2*x*f + 6*y*f + 4*x*g + 5*x", &v).unwrap();
        let e2 = parse_expression("3*y*f - 3*x*f + 6*y*g - 7*y", &v).unwrap();
        let (p1, p2) = (partition(&e1), partition(&e2));
        let f = &e1.terms()[1].kernel;
        assert_eq!(f.to_string(), "f");
        assert_eq!(p1.size_of(f), 2);
        let coeffs: Vec<String> = p1.block(f).unwrap().terms.iter().map(|t| t.to_string()).collect();
        assert_eq!(coeffs, ["2*x*f", "6*y*f"]);
        assert_eq!(shared_quotient_work(&p1, &p2), 6);
    }

    #[test]
    fn linearized_pair_work() {
        let v = vars();
        let e1 = parse_expression("3*x + 3*cos(x)*f*d(g,x) - 12*x*y*g + 6*x*g - y*g + sin(d(g,y))", &v).unwrap();
        let e2 = parse_expression("1 + 4*f*d(g,x) - 4*y*g + 2*g", &v).unwrap();
        assert_eq!(shared_quotient_work(&partition(&e1), &partition(&e2)), 8);
        assert_eq!(e1.term_count() * e2.term_count(), 24);
    }

    #[test]
    fn disjoint_kernels() {
        let v = vars();
        let e1 = parse_expression("x*f + y*f", &v).unwrap();
        let e2 = parse_expression("x*g", &v).unwrap();
        assert_eq!(shared_quotient_work(&partition(&e1), &partition(&e2)), 0);
    }
}
