use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::moebius::{disk_to_half_plane, MoebiusTransform};
use crate::error::{Error, Result};

/// A deck transformation lifted to the universal cover of SL(2, R).
///
/// Besides the matrix it carries a continuous branch of `arg(ci + d)` and the
/// image of the element in the abelianization of the surface group. The lift
/// makes non-integral powers of `cz + d` single valued cocycles, and the
/// abelian image lets characters be evaluated exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    pub matrix: MoebiusTransform,
    pub lift: f64,
    pub abelian: Vec<i32>,
}

fn principal_arg_j(m: &MoebiusTransform, z: Complex64) -> f64 {
    m.j(z).arg()
}

impl GroupElement {
    pub fn identity(rank: usize) -> Self {
        Self { matrix: MoebiusTransform::identity(), lift: 0.0, abelian: vec![0; rank] }
    }

    /// Lift of a bare matrix using the principal branch at `i`.
    pub fn from_matrix(matrix: MoebiusTransform, rank: usize) -> Self {
        let lift = principal_arg_j(&matrix, Complex64::i());
        Self { matrix, lift, abelian: vec![0; rank] }
    }

    pub fn generator(matrix: MoebiusTransform, index: usize, rank: usize) -> Self {
        let mut g = Self::from_matrix(matrix, rank);
        g.abelian[index] = 1;
        g
    }

    pub fn rank(&self) -> usize {
        self.abelian.len()
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        self.matrix.apply_unchecked(z)
    }

    /// Continuous argument of `cz + d` on the upper half-plane.
    pub fn arg_j(&self, z: Complex64) -> f64 {
        self.lift + principal_arg_j(&self.matrix, z) - principal_arg_j(&self.matrix, Complex64::i())
    }

    /// `self * other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        let i = Complex64::i();
        let w = other.matrix.apply_unchecked(i);
        let lift = self.lift + principal_arg_j(&self.matrix, w) - principal_arg_j(&self.matrix, i) + other.lift;
        let abelian = self.abelian.iter().zip(&other.abelian).map(|(a, b)| a + b).collect();
        Self { matrix: self.matrix.compose(&other.matrix), lift, abelian }
    }

    pub fn inverse(&self) -> Self {
        let i = Complex64::i();
        let inv = self.matrix.inverse();
        let w = self.matrix.apply_unchecked(i);
        let lift = -self.lift - principal_arg_j(&inv, w) + principal_arg_j(&inv, i);
        Self { matrix: inv, lift, abelian: self.abelian.iter().map(|a| -a).collect() }
    }
}

/// A deck transformation of either supported geometry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum DeckElement {
    Fuchsian(GroupElement),
    Translation { m1: i64, m2: i64, shift: Complex64 },
}

impl DeckElement {
    pub fn apply(&self, z: Complex64) -> Complex64 {
        match self {
            DeckElement::Fuchsian(g) => g.apply(z),
            DeckElement::Translation { shift, .. } => z + shift,
        }
    }

    pub fn compose(&self, other: &Self) -> Self {
        match (self, other) {
            (DeckElement::Fuchsian(a), DeckElement::Fuchsian(b)) => DeckElement::Fuchsian(a.compose(b)),
            (DeckElement::Translation { m1, m2, shift }, DeckElement::Translation { m1: n1, m2: n2, shift: s2 }) => {
                DeckElement::Translation { m1: m1 + n1, m2: m2 + n2, shift: shift + s2 }
            }
            _ => panic!("cannot compose deck elements of different geometries"),
        }
    }

    pub fn inverse(&self) -> Self {
        match self {
            DeckElement::Fuchsian(a) => DeckElement::Fuchsian(a.inverse()),
            DeckElement::Translation { m1, m2, shift } => DeckElement::Translation { m1: -m1, m2: -m2, shift: -shift },
        }
    }

    /// Image in the abelianization (exponent sums of the generators).
    pub fn abelian(&self) -> Vec<i64> {
        match self {
            DeckElement::Fuchsian(a) => a.abelian.iter().map(|&k| k as i64).collect(),
            DeckElement::Translation { m1, m2, .. } => vec![*m1, *m2],
        }
    }

    /// Pullback of a real one-form `(a1, a2)` given at `self.apply(z)` to `z`.
    pub fn pullback_one_form(&self, z: Complex64, form_at_image: [f64; 2]) -> [f64; 2] {
        match self {
            DeckElement::Fuchsian(g) => {
                let w = g.matrix.derivative(z);
                let [a1, a2] = form_at_image;
                // d(Re w) = Re w' dx - Im w' dy, d(Im w) = Im w' dx + Re w' dy
                [a1 * w.re + a2 * w.im, -a1 * w.im + a2 * w.re]
            }
            DeckElement::Translation { .. } => form_at_image,
        }
    }
}

/// One letter of a word in the generators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Letter {
    pub generator: usize,
    pub inverse: bool,
}

/// How a generator glues the fundamental polygon: it maps side `from_side`
/// onto side `to_side`, reversing the side's orientation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SidePairing {
    pub from_side: usize,
    pub to_side: usize,
}

/// Which sides of the 4g-gon are glued together.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairingScheme {
    /// Side `4k` to `4k + 2` and `4k + 1` to `4k + 3`; commutator relation.
    #[default]
    Commutator,
    /// Side `j + 2g` to side `j`. The half turn about the centre then
    /// conjugates every generator to its inverse.
    Opposite,
}

/// Side pairings of a regular hyperbolic 4g-gon centred at `i`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FuchsianGroup {
    pub genus: usize,
    #[serde(default)]
    pub scheme: PairingScheme,
    pub generators: Vec<MoebiusTransform>,
    pub relation_word: Vec<Letter>,
    pub pairings: Vec<SidePairing>,
    /// Polygon corners in the disk model, corner `j` starts side `j`.
    pub disk_vertices: Vec<Complex64>,
}

fn c2_mul(a: [[Complex64; 2]; 2], b: [[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    let mut r = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    r
}

fn disk_rotation(phi: f64) -> [[Complex64; 2]; 2] {
    let zero = Complex64::new(0.0, 0.0);
    [[Complex64::from_polar(1.0, phi / 2.0), zero], [zero, Complex64::from_polar(1.0, -phi / 2.0)]]
}

fn disk_to_half_plane_matrix(m: [[Complex64; 2]; 2]) -> Result<MoebiusTransform> {
    let i = Complex64::i();
    let one = Complex64::new(1.0, 0.0);
    // C maps H to the disk, w = (z - i)/(z + i).
    let c = [[one, -i], [one, i]];
    let cinv = [[i / (2.0 * i), i / (2.0 * i)], [-one / (2.0 * i), one / (2.0 * i)]];
    let r = c2_mul(cinv, c2_mul(m, c));
    let imag = r.iter().flatten().map(|v| v.im.abs()).fold(0.0, f64::max);
    if imag > 1e-10 {
        return Err(Error::Domain("disk isometry did not conjugate to a real matrix".into()));
    }
    MoebiusTransform::new(r[0][0].re, r[0][1].re, r[1][0].re, r[1][1].re)
}

impl FuchsianGroup {
    /// Number of sides of the fundamental polygon.
    pub fn sides(&self) -> usize {
        4 * self.genus
    }

    /// Hyperbolic distance from the polygon centre to each side midpoint.
    pub fn inradius(&self) -> f64 {
        (1.0 / (PI / self.sides() as f64).tan()).acosh()
    }

    /// Hyperbolic distance from the centre to each corner.
    pub fn circumradius(&self) -> f64 {
        let cot = 1.0 / (PI / self.sides() as f64).tan();
        (cot * cot).acosh()
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn generator_element(&self, k: usize) -> GroupElement {
        GroupElement::generator(self.generators[k], k, self.rank())
    }

    pub fn letter_element(&self, letter: Letter) -> GroupElement {
        let g = self.generator_element(letter.generator);
        if letter.inverse {
            g.inverse()
        } else {
            g
        }
    }

    /// Evaluates a word left to right as a product of lifted elements.
    pub fn evaluate_word(&self, word: &[Letter]) -> GroupElement {
        word.iter().fold(GroupElement::identity(self.rank()), |acc, &l| acc.compose(&self.letter_element(l)))
    }

    /// Distance of the evaluated relation word from the identity in PSL(2, R).
    pub fn relation_residual(&self) -> f64 {
        self.evaluate_word(&self.relation_word).matrix.distance_to_identity()
    }

    pub fn corner(&self, j: usize) -> Complex64 {
        disk_to_half_plane(self.disk_vertices[j % self.sides()])
    }
}

/// Builds the side-pairing group of the regular 4g-gon with all corner
/// angles equal to `pi / 2g`.
///
/// Side `4k` is glued to side `4k + 2` and side `4k + 1` to `4k + 3`.
pub fn build_fuchsian_group(genus: usize) -> Result<FuchsianGroup> {
    build_fuchsian_group_with(genus, PairingScheme::Commutator)
}

pub fn build_fuchsian_group_with(genus: usize, scheme: PairingScheme) -> Result<FuchsianGroup> {
    if genus < 2 {
        return Err(Error::Domain(format!("a hyperbolic surface needs genus >= 2, got {genus}")));
    }
    let n = 4 * genus;
    let step = 2.0 * PI / n as f64;
    let mid_dist = (1.0 / (PI / n as f64).tan()).acosh();
    let cot = 1.0 / (PI / n as f64).tan();
    let corner_dist = (cot * cot).acosh();
    let corner_r = (corner_dist / 2.0).tanh();
    let disk_vertices: Vec<Complex64> =
        (0..n).map(|j| Complex64::from_polar(corner_r, (j as f64 - 0.5) * step)).collect();

    let (ch, sh) = ((mid_dist).cosh(), (mid_dist).sinh());
    let t = [[Complex64::new(ch, 0.0), Complex64::new(sh, 0.0)], [Complex64::new(sh, 0.0), Complex64::new(ch, 0.0)]];
    let mut generators = Vec::with_capacity(2 * genus);
    let mut pairings = Vec::with_capacity(2 * genus);
    let glue: Vec<(usize, usize)> = match scheme {
        PairingScheme::Commutator => (0..genus).flat_map(|k| [(4 * k + 2, 4 * k), (4 * k + 3, 4 * k + 1)]).collect(),
        PairingScheme::Opposite => (0..2 * genus).map(|j| (j + 2 * genus, j)).collect(),
    };
    {
        for (from, to) in glue {
            let phi_from = from as f64 * step;
            let phi_to = to as f64 * step;
            let m = c2_mul(disk_rotation(phi_to), c2_mul(t, disk_rotation(PI - phi_from)));
            generators.push(disk_to_half_plane_matrix(m)?);
            pairings.push(SidePairing { from_side: from, to_side: to });
        }
    }
    let mut group = FuchsianGroup { genus, scheme, generators, relation_word: Vec::new(), pairings, disk_vertices };
    group.relation_word = match scheme {
        PairingScheme::Commutator => find_relation(&group)?,
        PairingScheme::Opposite => vertex_cycle_relation(&group)?,
    };
    Ok(group)
}

/// The relation read off by walking once around the polygon corner: at
/// corner `c` cross side `c` into the neighbouring copy, whose shared corner
/// is one past the partner side.
fn vertex_cycle_relation(group: &FuchsianGroup) -> Result<Vec<Letter>> {
    let n = group.sides();
    let mut word = Vec::with_capacity(n);
    let mut corner = 0;
    loop {
        let (letter, partner) = group
            .pairings
            .iter()
            .enumerate()
            .find_map(|(k, p)| {
                if p.to_side == corner {
                    Some((Letter { generator: k, inverse: false }, p.from_side))
                } else if p.from_side == corner {
                    Some((Letter { generator: k, inverse: true }, p.to_side))
                } else {
                    None
                }
            })
            .ok_or_else(|| Error::Domain(format!("side {corner} is not paired")))?;
        word.push(letter);
        corner = (partner + 1) % n;
        if corner == 0 || word.len() > n {
            break;
        }
    }
    let r = group.evaluate_word(&word).matrix.distance_to_identity();
    if word.len() != n || r > 1e-9 {
        return Err(Error::Domain(format!("corners do not close into one cycle (residual {r:e})")));
    }
    Ok(word)
}

/// Searches the commutator-product words for the surface relation.
fn find_relation(group: &FuchsianGroup) -> Result<Vec<Letter>> {
    let g = group.genus;
    let mut best: Option<(f64, Vec<Letter>)> = None;
    for order in 0..2 {
        for pattern in 0..8 {
            let swap = pattern & 1 == 1;
            let inv_x = pattern & 2 == 2;
            let inv_y = pattern & 4 == 4;
            let mut word = Vec::with_capacity(4 * g);
            for idx in 0..g {
                let k = if order == 0 { idx } else { g - 1 - idx };
                let (x, y) = if swap { (2 * k + 1, 2 * k) } else { (2 * k, 2 * k + 1) };
                word.push(Letter { generator: x, inverse: inv_x });
                word.push(Letter { generator: y, inverse: inv_y });
                word.push(Letter { generator: x, inverse: !inv_x });
                word.push(Letter { generator: y, inverse: !inv_y });
            }
            let r = group.evaluate_word(&word).matrix.distance_to_identity();
            if best.as_ref().is_none_or(|(b, _)| r < *b) {
                best = Some((r, word));
            }
        }
    }
    match best {
        Some((r, word)) if r < 1e-9 => Ok(word),
        Some((r, _)) => Err(Error::Domain(format!("no surface relation found, best residual {r:e}"))),
        None => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn genus_one_is_rejected() {
        assert!(build_fuchsian_group(1).is_err());
    }

    #[test]
    fn relation_holds_for_low_genus() {
        for genus in 2..=4 {
            for scheme in [PairingScheme::Commutator, PairingScheme::Opposite] {
                let group = build_fuchsian_group_with(genus, scheme).unwrap();
                assert_eq!(group.generators.len(), 2 * genus);
                assert_eq!(group.relation_word.len(), 4 * genus);
                assert!(group.relation_residual() < 1e-9, "genus {genus} {scheme:?}");
            }
        }
    }

    #[test]
    fn lifted_relator_is_central() {
        // The relator lifts to a rotation by a multiple of 2 pi in the
        // universal cover, i.e. a lift that is an integer multiple of pi.
        for (genus, scheme) in
            [(2, PairingScheme::Commutator), (3, PairingScheme::Commutator), (2, PairingScheme::Opposite)]
        {
            let group = build_fuchsian_group_with(genus, scheme).unwrap();
            let r = group.evaluate_word(&group.relation_word);
            let turns = r.lift / PI;
            assert!((turns - turns.round()).abs() < 1e-9);
            assert_eq!(turns.round().abs() as usize, 2 * genus - 2);
            assert!(r.abelian.iter().all(|&k| k == 0));
        }
    }

    #[test]
    fn generators_glue_corners() {
        for scheme in [PairingScheme::Commutator, PairingScheme::Opposite] {
            let group = build_fuchsian_group_with(2, scheme).unwrap();
            let n = group.sides();
            for (k, p) in group.pairings.iter().enumerate() {
                let g = group.generators[k];
                // start of from-side goes to end of to-side and vice versa
                let a = g.apply_unchecked(group.corner(p.from_side));
                let b = g.apply_unchecked(group.corner(p.from_side + 1));
                assert!((a - group.corner((p.to_side + 1) % n)).norm() < 1e-9);
                assert!((b - group.corner(p.to_side)).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn half_turn_inverts_opposite_generators() {
        let group = build_fuchsian_group_with(2, PairingScheme::Opposite).unwrap();
        // the half turn about i
        let r = MoebiusTransform::new(0.0, 1.0, -1.0, 0.0).unwrap();
        for g in &group.generators {
            let conj = r.compose(g).compose(&r.inverse());
            assert!(conj.compose(g).distance_to_identity() < 1e-9);
        }
    }

    #[test]
    fn lifted_composition_is_associative() {
        let group = build_fuchsian_group(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let mut pick = || {
                let l = Letter { generator: rng.random_range(0..4), inverse: rng.random() };
                group.letter_element(l)
            };
            let (a, b, c) = (pick(), pick(), pick());
            let left = a.compose(&b).compose(&c);
            let right = a.compose(&b.compose(&c));
            assert!((left.lift - right.lift).abs() < 1e-10);
            let id = a.compose(&a.inverse());
            assert!(id.lift.abs() < 1e-12 && id.matrix.distance_to_identity() < 1e-12);
        }
    }
}
