use std::collections::HashMap;

use super::{ScoredInstance, ScorerError};
use crate::corpus::TaskInstance;
use crate::textproc::TermVector;
use crate::Scalar;

/// Walks the union of two sorted sparse supports.
fn merge<T: Scalar>(a: &TermVector<T>, b: &TermVector<T>, mut visit: impl FnMut(T, T)) {
    let (mut x, mut y) = (a.entries.iter().peekable(), b.entries.iter().peekable());
    loop {
        match (x.peek(), y.peek()) {
            (Some(&&(i, p)), Some(&&(j, q))) => {
                if i == j {
                    visit(p, q);
                    x.next();
                    y.next();
                } else if i < j {
                    visit(p, T::zero());
                    x.next();
                } else {
                    visit(T::zero(), q);
                    y.next();
                }
            }
            (Some(&&(_, p)), None) => {
                visit(p, T::zero());
                x.next();
            }
            (None, Some(&&(_, q))) => {
                visit(T::zero(), q);
                y.next();
            }
            (None, None) => return,
        }
    }
}

/// Cosine similarity, clamped to [0, 1]; zero when either vector is empty.
pub fn cosine<T: Scalar>(a: &TermVector<T>, b: &TermVector<T>) -> T {
    if a.is_empty() || b.is_empty() {
        return T::zero();
    }
    let (mut dot, mut na, mut nb) = (T::zero(), T::zero(), T::zero());
    merge(a, b, |p, q| {
        dot = dot + p * q;
        na = na + p * p;
        nb = nb + q * q;
    });
    (dot / (na * nb).sqrt()).max(T::zero()).min(T::one())
}

/// Jensen-Shannon divergence in bits, in [0, 1]. Both vectors must be
/// probability distributions.
pub fn jensen_shannon_divergence<T: Scalar>(p: &TermVector<T>, q: &TermVector<T>) -> T {
    let half = T::of(0.5);
    let mut total = T::zero();
    merge(p, q, |a, b| {
        let m = (a + b) * half;
        if a > T::zero() {
            total = total + a * (a / m).log2();
        }
        if b > T::zero() {
            total = total + b * (b / m).log2();
        }
    });
    (total * half).max(T::zero()).min(T::one())
}

/// `1 - JSD`; zero when either vector is empty.
pub fn inverse_jensen_shannon<T: Scalar>(p: &TermVector<T>, q: &TermVector<T>) -> T {
    if p.is_empty() || q.is_empty() {
        return T::zero();
    }
    T::one() - jensen_shannon_divergence(p, q)
}

/// L1 distance; an empty vector acts as the zero vector.
pub fn manhattan<T: Scalar>(a: &TermVector<T>, b: &TermVector<T>) -> T {
    let mut d = T::zero();
    merge(a, b, |p, q| d = d + (p - q).abs());
    d
}

fn score_pairwise<T: Scalar>(
    instance: &TaskInstance,
    vectors: &HashMap<String, TermVector<T>>,
    similarity: fn(&TermVector<T>, &TermVector<T>) -> T,
) -> Result<ScoredInstance, ScorerError> {
    let lookup = |id: &str| {
        vectors
            .get(id)
            .unwrap_or_else(|| panic!("no term vector for speech {id}"))
    };
    let sup = lookup(&instance.supporting_id);
    let scores = instance
        .candidate_ids
        .iter()
        .map(|c| similarity(sup, lookup(c)).to_f64_lossy());
    ScoredInstance::from_candidate_scores(instance, scores)
}

/// Cosine similarity between normalized-frequency speech vectors.
pub fn score_cosine<T: Scalar>(
    instance: &TaskInstance,
    vectors: &HashMap<String, TermVector<T>>,
) -> Result<ScoredInstance, ScorerError> {
    score_pairwise(instance, vectors, cosine)
}

/// Inverse Jensen-Shannon divergence between normalized-frequency vectors.
pub fn score_js<T: Scalar>(
    instance: &TaskInstance,
    vectors: &HashMap<String, TermVector<T>>,
) -> Result<ScoredInstance, ScorerError> {
    score_pairwise(instance, vectors, inverse_jensen_shannon)
}
