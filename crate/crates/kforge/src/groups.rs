//! Finitely presented finite groups with canonical normal forms.
//!
//! Every family stores its elements as exponent vectors; the normal form of
//! an element is the ordered product of generator powers given by its
//! coordinates, so equality is coordinate equality and no generic word-problem
//! machinery is needed. Each family knows a finite presentation, which is
//! what the cohomology engine linearizes.

use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    /// Metacyclic twist fails r^b = 1 mod a.
    #[error("bad twist: {r}^{b} != 1 mod {a}")]
    BadTwist { a: u64, b: u64, r: u64 },
    /// The provided generators do not generate a subgroup containing what
    /// was claimed, or a hom fails its relation check.
    #[error("not a subgroup")]
    NotSubgroup,
    /// Semidirect action is not a well-defined automorphism family.
    #[error("invalid semidirect action: {0}")]
    InvalidAction(String),
}

/// A word in the generators: product of `gen^exp` left to right.
pub type Word = Vec<(usize, i64)>;

/// A group element: exponent vector in the family's coordinate system.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Elt(pub Vec<u64>);

impl fmt::Debug for Elt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "g{:?}", self.0)
    }
}

/// Family tag and data. `Semidirect` has an abelian normal part given by
/// coordinate orders, an arbitrary quotient group, and one integer matrix per
/// quotient generator describing its action on the normal exponent vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Family {
    Cyclic { order: u64 },
    Dihedral { rotation: u64 },
    Metacyclic { a: u64, b: u64, twist: u64 },
    Abelian { orders: Vec<u64> },
    Product { factors: Vec<FinGroup> },
    Semidirect {
        normal_orders: Vec<u64>,
        quotient: Box<FinGroup>,
        /// action[j] is the matrix of quotient generator j on the normal
        /// exponent vector (rows indexed by target coordinate).
        action: Vec<Vec<Vec<i64>>>,
    },
}

#[derive(Clone, PartialEq, Eq)]
pub struct FinGroup {
    pub family: Family,
    moduli: Vec<u64>,
}

impl fmt::Debug for FinGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            Family::Cyclic { order } => write!(f, "C{}", order),
            Family::Dihedral { rotation } => write!(f, "D{}", rotation),
            Family::Metacyclic { a, b, twist } => write!(f, "MC({a},{b};{twist})"),
            Family::Abelian { orders } => write!(f, "Ab{:?}", orders),
            Family::Product { factors } => {
                let names: Vec<String> = factors.iter().map(|g| format!("{:?}", g)).collect();
                write!(f, "({})", names.join(" x "))
            }
            Family::Semidirect { normal_orders, quotient, .. } => {
                write!(f, "(Ab{:?} : {:?})", normal_orders, quotient)
            }
        }
    }
}

pub fn cyclic(order: u64) -> FinGroup {
    assert!(order >= 1);
    FinGroup { family: Family::Cyclic { order }, moduli: vec![order] }
}

pub fn dihedral(rotation: u64) -> FinGroup {
    assert!(rotation >= 1);
    FinGroup { family: Family::Dihedral { rotation }, moduli: vec![rotation, 2] }
}

/// The group `<tau, f | tau^a = f^b = 1, f tau f^-1 = tau^r>` of order a*b.
pub fn metacyclic(a: u64, b: u64, r: u64) -> Result<FinGroup, GroupError> {
    assert!(a >= 1 && b >= 1);
    let r = r % a;
    if pow_mod_u(r, b, a) != 1 % a {
        return Err(GroupError::BadTwist { a, b, r });
    }
    Ok(FinGroup { family: Family::Metacyclic { a, b, twist: r }, moduli: vec![a, b] })
}

pub fn abelian(orders: Vec<u64>) -> FinGroup {
    assert!(orders.iter().all(|&o| o >= 1));
    FinGroup { family: Family::Abelian { orders: orders.clone() }, moduli: orders }
}

pub fn product(factors: Vec<FinGroup>) -> FinGroup {
    let moduli = factors.iter().flat_map(|g| g.moduli.clone()).collect();
    FinGroup { family: Family::Product { factors }, moduli }
}

/// Semidirect product of an abelian normal part by `quotient`, the action
/// given per quotient generator as an integer matrix on exponent vectors.
pub fn semidirect(
    normal_orders: Vec<u64>,
    quotient: FinGroup,
    action: Vec<Vec<Vec<i64>>>,
) -> Result<FinGroup, GroupError> {
    let m = normal_orders.len();
    if action.len() != quotient.num_generators() {
        return Err(GroupError::InvalidAction(format!(
            "need {} action matrices, got {}",
            quotient.num_generators(),
            action.len()
        )));
    }
    for mat in &action {
        if mat.len() != m || mat.iter().any(|row| row.len() != m) {
            return Err(GroupError::InvalidAction("bad matrix shape".into()));
        }
        // well-definedness with mixed orders: A_ij * o_j = 0 mod o_i
        for i in 0..m {
            for j in 0..m {
                let v = (mat[i][j].rem_euclid(normal_orders[i] as i64) as u64)
                    .wrapping_mul(normal_orders[j]);
                if v % normal_orders[i] != 0 {
                    return Err(GroupError::InvalidAction(format!(
                        "entry ({i},{j}) not compatible with orders"
                    )));
                }
            }
        }
    }
    let mut moduli = normal_orders.clone();
    moduli.extend(quotient.moduli.clone());
    let g = FinGroup {
        family: Family::Semidirect { normal_orders, quotient: Box::new(quotient), action },
        moduli,
    };
    // the action must be a homomorphism: every quotient relation acts as the
    // identity matrix
    if let Family::Semidirect { quotient, .. } = &g.family {
        for rel in quotient.relations() {
            let mat = g.action_of_word(&rel);
            if !g.action_is_identity(&mat) {
                return Err(GroupError::InvalidAction(
                    "action does not respect quotient relations".into(),
                ));
            }
        }
    }
    Ok(g)
}

fn pow_mod_u(mut b: u64, mut e: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    acc
}

impl FinGroup {
    pub fn order(&self) -> u64 {
        self.moduli.iter().product()
    }

    /// Coordinate moduli of the exponent-vector normal form.
    pub fn coord_moduli(&self) -> &[u64] {
        &self.moduli
    }

    pub fn num_generators(&self) -> usize {
        self.moduli.len()
    }

    pub fn identity(&self) -> Elt {
        Elt(vec![0; self.moduli.len()])
    }

    pub fn is_identity(&self, g: &Elt) -> bool {
        g.0.iter().all(|&e| e == 0)
    }

    /// The k-th generator as an element.
    pub fn generator(&self, k: usize) -> Elt {
        let mut v = vec![0; self.moduli.len()];
        v[k] = 1 % self.moduli[k];
        Elt(v)
    }

    pub fn generators(&self) -> Vec<Elt> {
        (0..self.moduli.len()).map(|k| self.generator(k)).collect()
    }

    pub fn mul(&self, x: &Elt, y: &Elt) -> Elt {
        match &self.family {
            Family::Cyclic { order } => Elt(vec![(x.0[0] + y.0[0]) % order]),
            Family::Dihedral { rotation } => {
                self.metacyclic_mul(*rotation, 2, rotation - 1, x, y)
            }
            Family::Metacyclic { a, b, twist } => self.metacyclic_mul(*a, *b, *twist, x, y),
            Family::Abelian { orders } => Elt(
                x.0.iter()
                    .zip(&y.0)
                    .zip(orders)
                    .map(|((u, v), o)| (u + v) % o)
                    .collect(),
            ),
            Family::Product { factors } => {
                let mut out = Vec::with_capacity(x.0.len());
                let mut off = 0;
                for f in factors {
                    let w = f.moduli.len();
                    let fx = Elt(x.0[off..off + w].to_vec());
                    let fy = Elt(y.0[off..off + w].to_vec());
                    out.extend(f.mul(&fx, &fy).0);
                    off += w;
                }
                Elt(out)
            }
            Family::Semidirect { normal_orders, quotient, .. } => {
                let m = normal_orders.len();
                let xq = Elt(x.0[m..].to_vec());
                let yq = Elt(y.0[m..].to_vec());
                let phi = self.action_of(&xq);
                let mut out = Vec::with_capacity(x.0.len());
                for i in 0..m {
                    let mut acc = x.0[i] as i128;
                    for j in 0..m {
                        acc += phi[i][j] as i128 * y.0[j] as i128;
                    }
                    out.push(acc.rem_euclid(normal_orders[i] as i128) as u64);
                }
                out.extend(quotient.mul(&xq, &yq).0);
                Elt(out)
            }
        }
    }

    fn metacyclic_mul(&self, a: u64, b: u64, r: u64, x: &Elt, y: &Elt) -> Elt {
        // (tau^i f^j)(tau^k f^l) = tau^(i + r^j k) f^(j + l)
        let rj = pow_mod_u(r, x.0[1], a);
        Elt(vec![(x.0[0] + rj * y.0[0]) % a, (x.0[1] + y.0[1]) % b])
    }

    pub fn inv(&self, x: &Elt) -> Elt {
        match &self.family {
            Family::Cyclic { order } => Elt(vec![(order - x.0[0]) % order]),
            Family::Dihedral { rotation } => self.metacyclic_inv(*rotation, 2, rotation - 1, x),
            Family::Metacyclic { a, b, twist } => self.metacyclic_inv(*a, *b, *twist, x),
            Family::Abelian { orders } => {
                Elt(x.0.iter().zip(orders).map(|(u, o)| (o - u) % o).collect())
            }
            Family::Product { factors } => {
                let mut out = Vec::with_capacity(x.0.len());
                let mut off = 0;
                for f in factors {
                    let w = f.moduli.len();
                    out.extend(f.inv(&Elt(x.0[off..off + w].to_vec())).0);
                    off += w;
                }
                Elt(out)
            }
            Family::Semidirect { normal_orders, quotient, .. } => {
                let m = normal_orders.len();
                let xq = Elt(x.0[m..].to_vec());
                let qinv = quotient.inv(&xq);
                let phi = self.action_of(&qinv);
                let mut out = Vec::with_capacity(x.0.len());
                for i in 0..m {
                    let mut acc: i128 = 0;
                    for j in 0..m {
                        acc -= phi[i][j] as i128 * x.0[j] as i128;
                    }
                    out.push(acc.rem_euclid(normal_orders[i] as i128) as u64);
                }
                out.extend(qinv.0);
                Elt(out)
            }
        }
    }

    fn metacyclic_inv(&self, a: u64, b: u64, r: u64, x: &Elt) -> Elt {
        // (tau^i f^j)^-1 = tau^(-r^(b-j) i) f^(-j)
        let jinv = (b - x.0[1]) % b;
        let rpow = pow_mod_u(r, jinv, a);
        Elt(vec![(a - rpow * x.0[0] % a) % a, jinv])
    }

    pub fn pow(&self, x: &Elt, e: i64) -> Elt {
        let (mut base, mut e) =
            if e < 0 { (self.inv(x), (-e) as u64) } else { (x.clone(), e as u64) };
        let mut acc = self.identity();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    pub fn conj(&self, g: &Elt, h: &Elt) -> Elt {
        // g h g^-1
        self.mul(&self.mul(g, h), &self.inv(g))
    }

    pub fn eval_word(&self, w: &Word) -> Elt {
        let mut acc = self.identity();
        for &(k, e) in w {
            acc = self.mul(&acc, &self.pow(&self.generator(k), e));
        }
        acc
    }

    /// Order of a single element.
    pub fn element_order(&self, g: &Elt) -> u64 {
        let mut n = 1u64;
        let mut acc = g.clone();
        while !self.is_identity(&acc) {
            acc = self.mul(&acc, g);
            n += 1;
        }
        n
    }

    /// Action matrix (on the normal part) of an arbitrary quotient element,
    /// for Semidirect groups.
    fn action_of(&self, q: &Elt) -> Vec<Vec<i64>> {
        let Family::Semidirect { normal_orders, quotient, action } = &self.family else {
            unreachable!()
        };
        let m = normal_orders.len();
        let mut acc = id_matrix(m);
        for (k, e) in quotient.decompose(q) {
            let mut mp = id_matrix(m);
            for _ in 0..e {
                mp = mat_mul_mod(&mp, &action[k], normal_orders);
            }
            acc = mat_mul_mod(&acc, &mp, normal_orders);
        }
        acc
    }

    fn action_of_word(&self, w: &Word) -> Vec<Vec<i64>> {
        let Family::Semidirect { normal_orders, quotient, action } = &self.family else {
            unreachable!()
        };
        let m = normal_orders.len();
        let mut acc = id_matrix(m);
        for &(k, e) in w {
            let base = if e >= 0 {
                action[k].clone()
            } else {
                invert_action_matrix(&action[k], normal_orders, quotient.moduli[k].max(2))
            };
            for _ in 0..e.unsigned_abs() {
                acc = mat_mul_mod(&acc, &base, normal_orders);
            }
        }
        acc
    }

    fn action_is_identity(&self, m: &[Vec<i64>]) -> bool {
        let Family::Semidirect { normal_orders, .. } = &self.family else { unreachable!() };
        for (i, row) in m.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                let want = if i == j { 1 } else { 0 };
                if (v - want).rem_euclid(normal_orders[i] as i64) != 0 {
                    return false;
                }
            }
        }
        true
    }

    /// Normal-form decomposition: the element as an ordered product of
    /// generator powers in coordinate order.
    pub fn decompose(&self, g: &Elt) -> Vec<(usize, u64)> {
        g.0.iter()
            .enumerate()
            .filter(|(_, &e)| e != 0)
            .map(|(k, &e)| (k, e))
            .collect()
    }

    /// Defining relations of the presentation on the coordinate generators.
    pub fn relations(&self) -> Vec<Word> {
        match &self.family {
            Family::Cyclic { order } => vec![vec![(0, *order as i64)]],
            Family::Dihedral { rotation } => metacyclic_relations(*rotation, 2, rotation - 1),
            Family::Metacyclic { a, b, twist } => metacyclic_relations(*a, *b, *twist),
            Family::Abelian { orders } => abelian_relations(orders, 0),
            Family::Product { factors } => {
                let mut rels = Vec::new();
                let mut off = 0;
                let mut spans = Vec::new();
                for f in factors {
                    let w = f.moduli.len();
                    for rel in f.relations() {
                        rels.push(rel.into_iter().map(|(k, e)| (k + off, e)).collect());
                    }
                    spans.push((off, w));
                    off += w;
                }
                // cross-factor commutators
                for a in 0..spans.len() {
                    for b in a + 1..spans.len() {
                        for i in spans[a].0..spans[a].0 + spans[a].1 {
                            for j in spans[b].0..spans[b].0 + spans[b].1 {
                                rels.push(vec![(i, 1), (j, 1), (i, -1), (j, -1)]);
                            }
                        }
                    }
                }
                rels
            }
            Family::Semidirect { normal_orders, quotient, action } => {
                let m = normal_orders.len();
                let mut rels = abelian_relations(normal_orders, 0);
                for rel in quotient.relations() {
                    rels.push(rel.into_iter().map(|(k, e)| (k + m, e)).collect());
                }
                // q_j a_i q_j^-1 = phi_j(a_i)
                for (j, mat) in action.iter().enumerate() {
                    for i in 0..m {
                        let mut w: Word = vec![(m + j, 1), (i, 1), (m + j, -1)];
                        for k in 0..m {
                            let e = mat[k][i].rem_euclid(normal_orders[k] as i64);
                            if e != 0 {
                                w.push((k, -e));
                            }
                        }
                        rels.push(w);
                    }
                }
                rels
            }
        }
    }

    /// Iterate all elements in the fixed normal-form order (first coordinate
    /// fastest). Desk scale only.
    pub fn iter_elements(&self) -> impl Iterator<Item = Elt> + '_ {
        let moduli = self.moduli.clone();
        let total = self.order();
        (0..total).map(move |mut k| {
            let mut v = Vec::with_capacity(moduli.len());
            for &m in &moduli {
                v.push(k % m);
                k /= m;
            }
            Elt(v)
        })
    }

    /// Subgroup closure of a generating set, as a sorted element list.
    pub fn closure(&self, gens: &[Elt]) -> Vec<Elt> {
        let mut seen: HashSet<Elt> = HashSet::new();
        let mut queue = vec![self.identity()];
        seen.insert(self.identity());
        while let Some(g) = queue.pop() {
            for s in gens {
                for t in [self.mul(&g, s), self.mul(&g, &self.inv(s))] {
                    if seen.insert(t.clone()) {
                        queue.push(t);
                    }
                }
            }
        }
        let mut out: Vec<Elt> = seen.into_iter().collect();
        out.sort();
        out
    }

    /// Verify a claimed subgroup element list is closed.
    pub fn is_closed_subgroup(&self, elems: &[Elt]) -> bool {
        let set: HashSet<&Elt> = elems.iter().collect();
        if !set.contains(&self.identity()) {
            return false;
        }
        for a in elems {
            if !set.contains(&self.inv(a)) {
                return false;
            }
            for b in elems {
                if !set.contains(&self.mul(a, b)) {
                    return false;
                }
            }
        }
        true
    }

    /// Left-coset representatives of the subgroup with the given element
    /// set, one per coset, in the fixed enumeration order. Deterministic.
    pub fn coset_reps(&self, subgroup_elems: &[Elt]) -> Result<Vec<Elt>, GroupError> {
        let set: HashSet<&Elt> = subgroup_elems.iter().collect();
        if !set.contains(&self.identity()) {
            return Err(GroupError::NotSubgroup);
        }
        let mut covered: HashSet<Elt> = HashSet::new();
        let mut reps = Vec::new();
        for g in self.iter_elements() {
            if covered.contains(&g) {
                continue;
            }
            for h in subgroup_elems {
                covered.insert(self.mul(&g, h));
            }
            reps.push(g);
        }
        if reps.len() as u64 * subgroup_elems.len() as u64 != self.order() {
            return Err(GroupError::NotSubgroup);
        }
        Ok(reps)
    }

    /// Is the subgroup (given by its element set) normal?
    pub fn is_normal(&self, subgroup_elems: &[Elt]) -> bool {
        let set: HashSet<&Elt> = subgroup_elems.iter().collect();
        for g in self.generators() {
            for h in subgroup_elems {
                if !set.contains(&self.conj(&g, h)) {
                    return false;
                }
            }
        }
        true
    }

    /// Serialize the group descriptor.
    pub fn to_json(&self) -> serde_json::Value {
        match &self.family {
            Family::Cyclic { order } => serde_json::json!({"family": "cyclic", "params": [order]}),
            Family::Dihedral { rotation } => {
                serde_json::json!({"family": "dihedral", "params": [rotation]})
            }
            Family::Metacyclic { a, b, twist } => {
                serde_json::json!({"family": "metacyclic", "params": [a, b, twist]})
            }
            Family::Abelian { orders } => {
                serde_json::json!({"family": "abelian", "params": orders})
            }
            Family::Product { factors } => serde_json::json!({
                "family": "product",
                "factors": factors.iter().map(|f| f.to_json()).collect::<Vec<_>>()
            }),
            Family::Semidirect { normal_orders, quotient, action } => serde_json::json!({
                "family": "semidirect",
                "normal_orders": normal_orders,
                "quotient": quotient.to_json(),
                "action": action,
            }),
        }
    }
}

fn metacyclic_relations(a: u64, b: u64, r: u64) -> Vec<Word> {
    vec![
        vec![(0, a as i64)],
        vec![(1, b as i64)],
        // f tau f^-1 tau^-r
        vec![(1, 1), (0, 1), (1, -1), (0, -(r as i64))],
    ]
}

fn abelian_relations(orders: &[u64], offset: usize) -> Vec<Word> {
    let mut rels: Vec<Word> = orders
        .iter()
        .enumerate()
        .map(|(i, &o)| vec![(offset + i, o as i64)])
        .collect();
    for i in 0..orders.len() {
        for j in i + 1..orders.len() {
            rels.push(vec![
                (offset + i, 1),
                (offset + j, 1),
                (offset + i, -1),
                (offset + j, -1),
            ]);
        }
    }
    rels
}

fn id_matrix(n: usize) -> Vec<Vec<i64>> {
    (0..n)
        .map(|i| (0..n).map(|j| i64::from(i == j)).collect())
        .collect()
}

fn mat_mul_mod(a: &[Vec<i64>], b: &[Vec<i64>], orders: &[u64]) -> Vec<Vec<i64>> {
    let n = a.len();
    let mut out = vec![vec![0i64; n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k] == 0 {
                continue;
            }
            for j in 0..n {
                out[i][j] = (out[i][j] as i128 + a[i][k] as i128 * b[k][j] as i128)
                    .rem_euclid(orders[i] as i128) as i64;
            }
        }
    }
    out
}

fn invert_action_matrix(m: &[Vec<i64>], orders: &[u64], order_bound: u64) -> Vec<Vec<i64>> {
    // generators have finite order, so the inverse matrix is a power
    let mut acc = id_matrix(m.len());
    for _ in 0..order_bound - 1 {
        acc = mat_mul_mod(&acc, m, orders);
    }
    acc
}

/// A homomorphism given by generator images; evaluation goes through the
/// normal-form decomposition of the argument.
#[derive(Clone, Debug)]
pub struct GroupHom {
    pub dom: FinGroup,
    pub cod: FinGroup,
    pub images: Vec<Elt>,
}

impl GroupHom {
    pub fn new(dom: FinGroup, cod: FinGroup, images: Vec<Elt>) -> Result<Self, GroupError> {
        assert_eq!(images.len(), dom.num_generators());
        let h = GroupHom { dom, cod, images };
        for rel in h.dom.relations() {
            let mut acc = h.cod.identity();
            for &(k, e) in &rel {
                acc = h.cod.mul(&acc, &h.cod.pow(&h.images[k], e));
            }
            if !h.cod.is_identity(&acc) {
                return Err(GroupError::NotSubgroup);
            }
        }
        Ok(h)
    }

    pub fn apply(&self, g: &Elt) -> Elt {
        let mut acc = self.cod.identity();
        for (k, e) in self.dom.decompose(g) {
            acc = self.cod.mul(&acc, &self.cod.pow(&self.images[k], e as i64));
        }
        acc
    }
}

// ---------------------------------------------------------------------------
// group-ring elements
// ---------------------------------------------------------------------------

/// An integer-coefficient element of `Z[A]` for a finite abelian group `A`.
#[derive(Clone, PartialEq, Eq)]
pub struct GroupRingElt {
    pub group: FinGroup,
    pub coeffs: HashMap<Elt, i64>,
}

impl fmt::Debug for GroupRingElt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms: Vec<(&Elt, &i64)> = self.coeffs.iter().collect();
        terms.sort_by_key(|(g, _)| (*g).clone());
        let body: Vec<String> = terms
            .iter()
            .filter(|(_, &c)| c != 0)
            .map(|(g, c)| format!("{c}*{:?}", g))
            .collect();
        write!(f, "[{}]", body.join(" + "))
    }
}

impl GroupRingElt {
    pub fn zero(group: &FinGroup) -> Self {
        GroupRingElt { group: group.clone(), coeffs: HashMap::new() }
    }
    pub fn one(group: &FinGroup) -> Self {
        let mut c = HashMap::new();
        c.insert(group.identity(), 1);
        GroupRingElt { group: group.clone(), coeffs: c }
    }
    pub fn term(group: &FinGroup, g: Elt, c: i64) -> Self {
        let mut m = HashMap::new();
        if c != 0 {
            m.insert(g, c);
        }
        GroupRingElt { group: group.clone(), coeffs: m }
    }
    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.coeffs.clone();
        for (g, c) in &other.coeffs {
            *out.entry(g.clone()).or_insert(0) += c;
        }
        out.retain(|_, c| *c != 0);
        GroupRingElt { group: self.group.clone(), coeffs: out }
    }
    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.coeffs.clone();
        for (g, c) in &other.coeffs {
            *out.entry(g.clone()).or_insert(0) -= c;
        }
        out.retain(|_, c| *c != 0);
        GroupRingElt { group: self.group.clone(), coeffs: out }
    }
    pub fn mul(&self, other: &Self) -> Self {
        let mut out: HashMap<Elt, i64> = HashMap::new();
        for (g, c) in &self.coeffs {
            for (h, d) in &other.coeffs {
                *out.entry(self.group.mul(g, h)).or_insert(0) += c * d;
            }
        }
        out.retain(|_, c| *c != 0);
        GroupRingElt { group: self.group.clone(), coeffs: out }
    }
    pub fn scale(&self, k: i64) -> Self {
        if k == 0 {
            return Self::zero(&self.group);
        }
        let mut out = self.coeffs.clone();
        for c in out.values_mut() {
            *c *= k;
        }
        GroupRingElt { group: self.group.clone(), coeffs: out }
    }
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }
}

/// `Tr = sum_{i=0}^{M-1} sigma^i` in `Z[<sigma>]`.
pub fn trace_operator(big_m: u64, group: &FinGroup, sigma: &Elt) -> GroupRingElt {
    assert!(big_m >= 1);
    let mut out = GroupRingElt::zero(group);
    let mut g = group.identity();
    for _ in 0..big_m {
        *out.coeffs.entry(g.clone()).or_insert(0) += 1;
        g = group.mul(&g, sigma);
    }
    out.coeffs.retain(|_, c| *c != 0);
    out
}

/// Kolyvagin's derivative `D = sum_{i=1}^{M-1} i sigma^i` in `Z[<sigma>]`.
pub fn derivative_operator(big_m: u64, group: &FinGroup, sigma: &Elt) -> GroupRingElt {
    assert!(big_m >= 2);
    let mut out = GroupRingElt::zero(group);
    let mut g = sigma.clone();
    for i in 1..big_m {
        *out.coeffs.entry(g.clone()).or_insert(0) += i as i64;
        g = group.mul(&g, sigma);
    }
    out.coeffs.retain(|_, c| *c != 0);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metacyclic_examples() {
        // (4, 2, 3) -> dihedral of order 8
        let g = metacyclic(4, 2, 3).unwrap();
        assert_eq!(g.order(), 8);
        let d = dihedral(4);
        for x in g.iter_elements() {
            for y in g.iter_elements() {
                assert_eq!(g.mul(&x, &y), d.mul(&x, &y));
            }
        }
        // modular exponentiation oracle: 11^4 = 14641 = 7 mod 18, so the
        // twist condition fails
        assert_eq!(pow_mod_u(11, 4, 18), 7);
        assert!(matches!(metacyclic(18, 4, 11), Err(GroupError::BadTwist { .. })));
        // a genuine order-4 twist: 3^4 = 81 = 1 mod 16
        assert_eq!(pow_mod_u(3, 4, 16), 1);
        let g = metacyclic(16, 4, 3).unwrap();
        assert_eq!(g.order(), 64);
        // (6, 2, 4): 4^2 = 16 = 4 != 1 mod 6
        assert!(matches!(metacyclic(6, 2, 4), Err(GroupError::BadTwist { .. })));
    }

    #[test]
    fn normal_form_soundness_small() {
        let groups = vec![
            cyclic(12),
            dihedral(8),
            metacyclic(9, 6, 2).unwrap(),
            abelian(vec![3, 3, 4]),
            product(vec![cyclic(3), dihedral(4)]),
            semidirect(vec![3, 3], cyclic(2), vec![vec![vec![-1, 0], vec![0, -1]]]).unwrap(),
        ];
        for g in groups {
            let elems: Vec<Elt> = g.iter_elements().collect();
            assert_eq!(elems.len() as u64, g.order());
            for x in &elems {
                assert!(g.is_identity(&g.mul(x, &g.inv(x))));
                for y in &elems {
                    let xy = g.mul(x, y);
                    assert!(xy.0.iter().zip(g.coord_moduli()).all(|(&e, &m)| e < m));
                    for z in elems.iter().take(6) {
                        assert_eq!(g.mul(&xy, z), g.mul(x, &g.mul(y, z)), "associativity");
                    }
                }
            }
            for rel in g.relations() {
                assert!(g.is_identity(&g.eval_word(&rel)), "relation holds in {:?}", g);
            }
        }
    }

    #[test]
    fn decompose_reconstructs() {
        let g = semidirect(vec![9, 9], dihedral(3), vec![
            vec![vec![1, 0], vec![0, 1]],
            vec![vec![-1, 0], vec![0, -1]],
        ])
        .unwrap();
        for x in g.iter_elements() {
            let mut acc = g.identity();
            for (k, e) in g.decompose(&x) {
                acc = g.mul(&acc, &g.pow(&g.generator(k), e as i64));
            }
            assert_eq!(acc, x, "normal form reconstructs the element");
        }
    }

    #[test]
    fn telescopic_identity() {
        // (sigma - 1) D = M - Tr for 2 <= M <= 500
        for big_m in 2..=500u64 {
            let g = cyclic(big_m);
            let sigma = g.generator(0);
            let d = derivative_operator(big_m, &g, &sigma);
            let tr = trace_operator(big_m, &g, &sigma);
            let sig_minus_1 =
                GroupRingElt::term(&g, sigma.clone(), 1).sub(&GroupRingElt::one(&g));
            let lhs = sig_minus_1.mul(&d);
            let rhs = GroupRingElt::one(&g).scale(big_m as i64).sub(&tr);
            assert_eq!(lhs, rhs, "telescopic identity at M = {big_m}");
        }
    }

    #[test]
    fn trace_and_derivative_small() {
        let g = cyclic(4);
        let s = g.generator(0);
        let d = derivative_operator(4, &g, &s);
        assert_eq!(d.coeffs.get(&Elt(vec![1])), Some(&1));
        assert_eq!(d.coeffs.get(&Elt(vec![2])), Some(&2));
        assert_eq!(d.coeffs.get(&Elt(vec![3])), Some(&3));
        assert_eq!(d.coeffs.get(&Elt(vec![0])), None);
        let d2 = derivative_operator(2, &cyclic(2), &cyclic(2).generator(0));
        assert_eq!(d2.coeffs.len(), 1);
        let t1 = trace_operator(1, &cyclic(5), &cyclic(5).generator(0));
        assert_eq!(t1, GroupRingElt::one(&cyclic(5)));
        let t3 = trace_operator(3, &cyclic(3), &cyclic(3).generator(0));
        assert_eq!(t3.coeffs.len(), 3);
        // Tr * (sigma - 1) = 0
        let g = cyclic(6);
        let s = g.generator(0);
        let tr = trace_operator(6, &g, &s);
        let sm1 = GroupRingElt::term(&g, s.clone(), 1).sub(&GroupRingElt::one(&g));
        assert!(tr.mul(&sm1).is_zero());
    }

    #[test]
    fn derivative_product_commutes() {
        let g = product(vec![cyclic(4), cyclic(9)]);
        let s1 = g.generator(0);
        let s2 = g.generator(1);
        let d1 = derivative_operator(4, &g, &s1);
        let d2 = derivative_operator(9, &g, &s2);
        assert_eq!(d1.mul(&d2), d2.mul(&d1));
    }

    #[test]
    fn coset_reps_examples() {
        let g = cyclic(6);
        let all: Vec<Elt> = g.iter_elements().collect();
        assert_eq!(g.coset_reps(&all).unwrap(), vec![g.identity()]);
        let h = g.closure(&[g.pow(&g.generator(0), 3)]);
        let reps = g.coset_reps(&h).unwrap();
        assert_eq!(reps.len(), 3);
        assert_eq!(reps, g.coset_reps(&h).unwrap());
        let g = dihedral(8);
        for gen in g.iter_elements() {
            let h = g.closure(&[gen]);
            let reps = g.coset_reps(&h).unwrap();
            assert_eq!(reps.len() as u64 * h.len() as u64, g.order());
            let mut seen = HashSet::new();
            for r in &reps {
                for x in &h {
                    assert!(seen.insert(g.mul(r, x)), "cosets overlap");
                }
            }
            assert_eq!(seen.len() as u64, g.order());
        }
        assert!(g.coset_reps(&[g.generator(0)]).is_err());
    }

    #[test]
    fn hom_validation() {
        let c6 = cyclic(6);
        let c3 = cyclic(3);
        let h = GroupHom::new(c6.clone(), c3.clone(), vec![c3.generator(0)]).unwrap();
        assert_eq!(h.apply(&c6.pow(&c6.generator(0), 4)), c3.generator(0));
        let c2 = cyclic(2);
        assert!(GroupHom::new(c3, c2.clone(), vec![c2.generator(0)]).is_err());
    }

    #[test]
    fn semidirect_inversion_action() {
        // C3 x| C2 with inversion = S3
        let g = semidirect(vec![3], cyclic(2), vec![vec![vec![-1]]]).unwrap();
        assert_eq!(g.order(), 6);
        let a = g.generator(0);
        let f = g.generator(1);
        assert_eq!(g.conj(&f, &a), g.inv(&a));
        assert_ne!(g.mul(&a, &f), g.mul(&f, &a));
    }
}
