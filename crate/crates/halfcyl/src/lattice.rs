//! Integer vector sequence {a_k} ⊂ Z³ with |a_k|² = 4k+1 and
//! 3(a_k·a_{k+1})² ≤ |a_k|²|a_{k+1}|², i.e. consecutive angles α_k with
//! sin²α_k ≥ 2/3. Numbers 4k+1 are never of the excluded form 4^a(8b+7),
//! so a three-squares representation always exists; the sign/permutation
//! walk below turns an arbitrary representation into an admissible next
//! step. All certificates are exact i128 arithmetic.

use crate::error::{Error, Result};
use serde::Serialize;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LatticeVec {
    pub coords: [i64; 3],
    pub k: u64,
}

impl LatticeVec {
    pub fn norm_sq(&self) -> i128 {
        self.coords.iter().map(|&c| (c as i128) * (c as i128)).sum()
    }

    /// |a_k|² = 4k+1, exactly.
    pub fn norm_certified(&self) -> bool {
        self.norm_sq() == 4 * self.k as i128 + 1
    }
}

/// One consecutive pair record: 3·dot² ≤ (4k+1)(4k+5), kept as the rational
/// bound dot² ≤ bound_sq_num / bound_sq_den.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PairCertificate {
    pub k: u64,
    pub dot: i128,
    pub bound_sq_num: i128,
    pub bound_sq_den: i128,
}

impl PairCertificate {
    pub fn new(a: &LatticeVec, b: &LatticeVec) -> Self {
        debug_assert_eq!(b.k, a.k + 1);
        let dot = a
            .coords
            .iter()
            .zip(b.coords.iter())
            .map(|(&x, &y)| x as i128 * y as i128)
            .sum();
        let k = a.k as i128;
        PairCertificate {
            k: a.k,
            dot,
            bound_sq_num: (4 * k + 1) * (4 * k + 5),
            bound_sq_den: 3,
        }
    }

    pub fn admissible(&self) -> bool {
        self.bound_sq_den * self.dot * self.dot <= self.bound_sq_num
    }

    /// sin²α = 1 − dot²/((4k+1)(4k+5)) as an exact rational.
    pub fn sin2_num(&self) -> i128 {
        self.bound_sq_num - self.dot * self.dot
    }

    pub fn sin2_den(&self) -> i128 {
        self.bound_sq_num
    }

    /// sin²α ≥ 2/3 cleared of denominators.
    pub fn sin2_at_least_two_thirds(&self) -> bool {
        3 * self.sin2_num() >= 2 * self.sin2_den()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SequenceCertificate {
    pub pairs: Vec<PairCertificate>,
}

impl SequenceCertificate {
    pub fn all_admissible(&self) -> bool {
        self.pairs.iter().all(|p| p.admissible() && p.sin2_at_least_two_thirds())
    }
}

/// True iff n = 4^a(8b+7), the numbers with no three-squares representation.
pub fn excluded_form(mut n: u64) -> bool {
    while n > 0 && n % 4 == 0 {
        n /= 4;
    }
    n % 8 == 7
}

/// All triples 0 ≤ x ≤ y ≤ z with x²+y²+z² = n, lexicographically sorted.
/// Empty exactly for the excluded forms.
pub fn three_squares_reps(n: u64) -> Vec<[u64; 3]> {
    assert!(n >= 1);
    let mut out = Vec::new();
    let mut x = 0u64;
    while 3 * x * x <= n {
        let rem_x = n - x * x;
        let mut y = x;
        while 2 * y * y <= rem_x {
            let rem = rem_x - y * y;
            let z = rem.isqrt();
            if z * z == rem {
                debug_assert!(z >= y);
                out.push([x, y, z]);
            }
            y += 1;
        }
        x += 1;
    }
    out
}

// Sign walk patterns: consecutive sums differ by flipping one product, so the
// sums are monotone and some consecutive pair straddles zero.
const PATTERNS: [[i128; 3]; 4] = [[1, 1, 1], [1, 1, -1], [1, -1, -1], [-1, -1, -1]];

/// Permute and sign a representation so that 3(a·b')² ≤ |a|²|b'|² exactly.
///
/// Pair the descending |a| coordinates with the ascending b_rep entries, so
/// the l-th product satisfies p_l² ≤ |a|²|b|²/((l+1)(3−l)) ≤ |a|²|b|²/3.
/// Among the four sums ±p₀±p₁±p₂ above, the straddling pair brackets zero
/// and the smaller magnitude is at most the flipped product, hence
/// admissible. Ties resolve to the earliest of the four sums in walk order.
pub fn choose_signs(a: [i64; 3], b_rep: [u64; 3]) -> [i64; 3] {
    assert!(a != [0, 0, 0], "a must be nonzero");
    assert!(b_rep != [0, 0, 0], "b_rep must be nonzero");

    let mut idx = [0usize, 1, 2];
    idx.sort_by_key(|&i| (std::cmp::Reverse(a[i].abs()), i));
    let mut b_sorted = b_rep;
    b_sorted.sort_unstable();

    let p: [i128; 3] =
        std::array::from_fn(|l| a[idx[l]].unsigned_abs() as i128 * b_sorted[l] as i128);

    let mut best: Option<(i128, [i64; 3])> = None;
    for pat in PATTERNS {
        let s: i128 = (0..3).map(|l| pat[l] * p[l]).sum();
        let mut cand = [0i64; 3];
        for l in 0..3 {
            // zero coordinates of a keep positive sign; only |cand| matters there
            let sign_a: i64 = if a[idx[l]] < 0 { -1 } else { 1 };
            cand[idx[l]] = pat[l] as i64 * sign_a * b_sorted[l] as i64;
        }
        if best.is_none() || s.abs() < best.unwrap().0 {
            best = Some((s.abs(), cand));
        }
    }
    let (abs_dot, out) = best.unwrap();

    let na: i128 = a.iter().map(|&c| (c as i128) * (c as i128)).sum();
    let nb: i128 = b_rep.iter().map(|&c| (c as i128) * (c as i128)).sum();
    debug_assert!(3 * abs_dot * abs_dot <= na * nb, "sign walk lost admissibility");
    out
}

/// a_1..a_{k_max} plus the consecutive-pair certificate. Deterministic: the
/// representation is the lexicographically smallest sorted triple, then the
/// sign walk runs against the previous member.
pub fn build_sequence(k_max: u64) -> (Vec<LatticeVec>, SequenceCertificate) {
    assert!(k_max >= 1);
    // (4k+1)(4k+5) must fit in i128 with room for the ×3 check
    assert!(k_max < 1 << 60, "k_max too large for exact certificates");
    let mut seq = Vec::with_capacity(k_max as usize);
    let first = three_squares_reps(5)[0];
    seq.push(LatticeVec {
        coords: [first[0] as i64, first[1] as i64, first[2] as i64],
        k: 1,
    });
    for k in 2..=k_max {
        let reps = three_squares_reps(4 * k + 1);
        let b = *reps
            .first()
            .expect("4k+1 is never of the form 4^a(8b+7); empty list is a bug");
        let prev = seq.last().unwrap().coords;
        let coords = choose_signs(prev, b);
        seq.push(LatticeVec { coords, k });
    }
    let pairs = seq
        .windows(2)
        .map(|w| PairCertificate::new(&w[0], &w[1]))
        .collect();
    (seq, SequenceCertificate { pairs })
}

/// Unit vector e ∈ span(a,b) with e ⊥ b and a·e ≥ 0. For a certified
/// consecutive pair, a·e = |a|·sin α ≥ √(2/3)·|a|.
pub fn orth_unit_in_plane(a: &LatticeVec, b: &LatticeVec) -> Result<[f64; 3]> {
    let af: [f64; 3] = std::array::from_fn(|i| a.coords[i] as f64);
    let bf: [f64; 3] = std::array::from_fn(|i| b.coords[i] as f64);
    let bb: f64 = bf.iter().map(|v| v * v).sum();
    let ab: f64 = af.iter().zip(bf.iter()).map(|(x, y)| x * y).sum();
    if bb == 0.0 {
        return Err(Error::DegenerateInput("b is zero".into()));
    }
    let proj = ab / bb;
    let e_raw: [f64; 3] = std::array::from_fn(|i| af[i] - proj * bf[i]);
    let nn: f64 = e_raw.iter().map(|v| v * v).sum();
    let aa: f64 = af.iter().map(|v| v * v).sum();
    if nn <= 1e-24 * aa {
        return Err(Error::DegenerateInput("a and b are parallel".into()));
    }
    let n = nn.sqrt();
    let mut e: [f64; 3] = std::array::from_fn(|i| e_raw[i] / n);
    // a·e = (|a|² − (a·b)²/|b|²)/|e_raw| ≥ 0 up to roundoff; pin the sign
    let ae: f64 = af.iter().zip(e.iter()).map(|(x, y)| x * y).sum();
    if ae < 0.0 {
        for v in &mut e {
            *v = -*v;
        }
    }
    Ok(e)
}

/// CSV columns: k,a1,a2,a3,dot_with_next,sin2_num,sin2_den. The last row has
/// no successor and leaves the pair fields empty.
pub fn write_sequence_csv(
    path: &Path,
    seq: &[LatticeVec],
    cert: &SequenceCertificate,
) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "k,a1,a2,a3,dot_with_next,sin2_num,sin2_den")?;
    for (i, v) in seq.iter().enumerate() {
        if let Some(p) = cert.pairs.get(i) {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                v.k, v.coords[0], v.coords[1], v.coords[2], p.dot, p.sin2_num(), p.sin2_den()
            )?;
        } else {
            writeln!(out, "{},{},{},{},,,", v.k, v.coords[0], v.coords[1], v.coords[2])?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_reps(n: u64) -> Vec<[u64; 3]> {
        let mut out = Vec::new();
        let r = n.isqrt();
        for x in 0..=r {
            for y in x..=r {
                for z in y..=r {
                    if x * x + y * y + z * z == n {
                        out.push([x, y, z]);
                    }
                }
            }
        }
        out
    }

    /// All 48 signed permutations of a non-negative triple.
    fn signed_perms(b: [u64; 3]) -> Vec<[i64; 3]> {
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let mut out = Vec::new();
        for p in perms {
            for s in 0..8u32 {
                let mut c = [0i64; 3];
                for i in 0..3 {
                    let sign = if s >> i & 1 == 1 { -1 } else { 1 };
                    c[i] = sign * b[p[i]] as i64;
                }
                out.push(c);
            }
        }
        out
    }

    fn dot(a: [i64; 3], b: [i64; 3]) -> i128 {
        a.iter().zip(b.iter()).map(|(&x, &y)| x as i128 * y as i128).sum()
    }

    #[test]
    fn reps_examples() {
        assert_eq!(three_squares_reps(5), vec![[0, 1, 2]]);
        assert_eq!(three_squares_reps(1), vec![[0, 0, 1]]);
        assert_eq!(three_squares_reps(9), vec![[0, 0, 3], [1, 2, 2]]);
        assert_eq!(three_squares_reps(7), Vec::<[u64; 3]>::new());
    }

    #[test]
    fn reps_match_brute_force() {
        for n in 1..=600 {
            assert_eq!(three_squares_reps(n), brute_reps(n), "n = {n}");
        }
    }

    #[test]
    fn emptiness_exactly_on_excluded_forms() {
        for n in 1..=5000 {
            assert_eq!(three_squares_reps(n).is_empty(), excluded_form(n), "n = {n}");
        }
    }

    #[test]
    fn choose_signs_examples() {
        // an admissible output class; dot 0 requires a non-walk permutation,
        // the walk lands on |dot| = 1 which is within the bound
        let c = choose_signs([2, 1, 0], [0, 1, 2]);
        let d = dot([2, 1, 0], c);
        assert!(3 * d * d <= 25);
        let mut sorted: Vec<u64> = c.iter().map(|v| v.unsigned_abs()).collect();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 1, 2]);

        assert_eq!(choose_signs([2, 1, 0], [0, 0, 3]), [0, 0, 3]);
        assert_eq!(dot([2, 1, 0], [0, 0, 3]), 0);

        let c = choose_signs([0, 0, 3], [0, 2, 3]);
        assert_eq!(c, [2, 3, 0]);
        assert_eq!(dot([0, 0, 3], c), 0);
    }

    #[test]
    fn choose_signs_never_beats_exhaustive_admissibility() {
        // the walk's |dot| is admissible wherever the exhaustive minimizer is
        let (seq, _) = build_sequence(1000);
        for w in seq.windows(2) {
            let a = w[0].coords;
            let bu: [u64; 3] = std::array::from_fn(|i| w[1].coords[i].unsigned_abs());
            let chosen = dot(a, w[1].coords).abs();
            let best = signed_perms(bu)
                .into_iter()
                .map(|c| dot(a, c).abs())
                .min()
                .unwrap();
            assert!(best <= chosen);
            let na: i128 = a.iter().map(|&v| (v as i128).pow(2)).sum();
            let nb: i128 = bu.iter().map(|&v| (v as i128).pow(2)).sum();
            assert!(3 * chosen * chosen <= na * nb, "k = {}", w[0].k);
        }
    }

    #[test]
    fn sequence_examples_and_invariants() {
        let (seq, cert) = build_sequence(2);
        assert_eq!(seq[0].coords, [0, 1, 2]);
        assert_eq!(seq[0].norm_sq(), 5);
        assert_eq!(seq[1].norm_sq(), 9);
        let p = &cert.pairs[0];
        assert!(3 * p.dot * p.dot <= 45);

        let (seq, cert) = build_sequence(2000);
        for v in &seq {
            assert!(v.norm_certified(), "k = {}", v.k);
        }
        assert!(cert.all_admissible());
        for p in &cert.pairs {
            assert_eq!(p.bound_sq_num, (4 * p.k as i128 + 1) * (4 * p.k as i128 + 5));
            assert_eq!(p.sin2_num() + p.dot * p.dot, p.sin2_den());
        }
    }

    #[test]
    fn sequence_is_deterministic() {
        let (s1, c1) = build_sequence(300);
        let (s2, c2) = build_sequence(300);
        assert_eq!(s1, s2);
        assert_eq!(
            c1.pairs.iter().map(|p| p.dot).collect::<Vec<_>>(),
            c2.pairs.iter().map(|p| p.dot).collect::<Vec<_>>()
        );
    }

    #[test]
    fn orth_unit_examples() {
        let a = LatticeVec { coords: [1, 0, 0], k: 0 };
        let b = LatticeVec { coords: [0, 1, 0], k: 1 };
        assert_eq!(orth_unit_in_plane(&a, &b).unwrap(), [1.0, 0.0, 0.0]);

        let a = LatticeVec { coords: [1, 1, 0], k: 0 };
        let e = orth_unit_in_plane(&a, &b).unwrap();
        assert!((e[0] - 1.0).abs() < 1e-15 && e[1].abs() < 1e-15 && e[2].abs() < 1e-15);

        let par = LatticeVec { coords: [2, 2, 0], k: 1 };
        assert!(orth_unit_in_plane(&a, &par).is_err());
    }

    #[test]
    fn orth_unit_angle_bound_on_sequence() {
        let (seq, _) = build_sequence(500);
        for w in seq.windows(2) {
            let e = orth_unit_in_plane(&w[0], &w[1]).unwrap();
            let af: [f64; 3] = std::array::from_fn(|i| w[0].coords[i] as f64);
            let ae: f64 = af.iter().zip(e.iter()).map(|(x, y)| x * y).sum();
            let norm_a = (w[0].norm_sq() as f64).sqrt();
            assert!(ae >= (2.0f64 / 3.0).sqrt() * norm_a - 1e-12, "k = {}", w[0].k);
        }
    }

    #[test]
    fn csv_layout() {
        let dir = std::env::temp_dir().join("halfcyl_seq_csv_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("seq.csv");
        let (seq, cert) = build_sequence(3);
        write_sequence_csv(&path, &seq, &cert).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "k,a1,a2,a3,dot_with_next,sin2_num,sin2_den");
        assert_eq!(lines.len(), 4);
        assert!(lines[3].ends_with(",,,"));
        assert_eq!(lines[1].split(',').count(), 7);
    }

    proptest! {
        #[test]
        fn reps_are_exact_and_sorted(n in 1u64..200_000) {
            let reps = three_squares_reps(n);
            for r in &reps {
                prop_assert_eq!(r[0]*r[0] + r[1]*r[1] + r[2]*r[2], n);
                prop_assert!(r[0] <= r[1] && r[1] <= r[2]);
            }
            let mut sorted = reps.clone();
            sorted.sort();
            sorted.dedup();
            prop_assert_eq!(sorted, reps);
        }

        #[test]
        fn choose_signs_is_norm_preserving_and_admissible(
            ax in -40i64..40, ay in -40i64..40, az in -40i64..40,
            bx in 0u64..40, by in 0u64..40, bz in 0u64..40,
        ) {
            prop_assume!([ax, ay, az] != [0, 0, 0]);
            prop_assume!([bx, by, bz] != [0, 0, 0]);
            let a = [ax, ay, az];
            let b = [bx, by, bz];
            let c = choose_signs(a, b);
            let mut want: Vec<u64> = b.to_vec();
            want.sort_unstable();
            let mut got: Vec<u64> = c.iter().map(|v| v.unsigned_abs()).collect();
            got.sort_unstable();
            prop_assert_eq!(got, want);
            let d = dot(a, c);
            let na: i128 = a.iter().map(|&v| (v as i128).pow(2)).sum();
            let nb: i128 = b.iter().map(|&v| (v as i128).pow(2)).sum();
            prop_assert!(3 * d * d <= na * nb);
        }
    }
}
