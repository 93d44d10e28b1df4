//! Solve cache shared across claim checks. Sweep points are solved
//! concurrently by callers; the cache deduplicates shared points by
//! spec hash and runs the invariant suite once per fresh field.

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::{Arc, Mutex};

use crate::analysis::claims::Assertion;
use crate::analysis::invariants::run_invariant_suite;
use crate::error::Result;
use crate::problem::ProblemSpec;
use crate::solver::{solve, SolutionField};

/// Retained fields; a default-sized field is ~13 MB.
const CACHE_CAPACITY: usize = 10;

#[derive(Default)]
struct CacheInner {
    fields: HashMap<u64, Arc<SolutionField>>,
    order: VecDeque<u64>,
}

pub struct Harness {
    cache: Mutex<CacheInner>,
    invariants: Mutex<Vec<Assertion>>,
    audited: Mutex<HashSet<u64>>,
    /// Invariant suites add one full pass over each field; they are on
    /// for verification runs and off for plain output commands.
    run_invariants: bool,
}

impl Harness {
    pub fn new(run_invariants: bool) -> Self {
        Harness {
            cache: Mutex::new(CacheInner::default()),
            invariants: Mutex::new(Vec::new()),
            audited: Mutex::new(HashSet::new()),
            run_invariants,
        }
    }

    /// Cached solve. Concurrent misses of the same spec may solve twice;
    /// the result is deterministic so the duplicate is only wasted work.
    pub fn field(&self, spec: &ProblemSpec) -> Result<Arc<SolutionField>> {
        let key = spec.hash();
        if let Some(found) = self.cache.lock().unwrap().fields.get(&key) {
            return Ok(found.clone());
        }
        let field = Arc::new(solve(spec)?);
        if self.run_invariants && self.audited.lock().unwrap().insert(key) {
            let assertions = run_invariant_suite(&field)?;
            self.invariants.lock().unwrap().extend(assertions);
        }
        let mut cache = self.cache.lock().unwrap();
        if !cache.fields.contains_key(&key) {
            cache.order.push_back(key);
            cache.fields.insert(key, field.clone());
            while cache.order.len() > CACHE_CAPACITY {
                if let Some(old) = cache.order.pop_front() {
                    cache.fields.remove(&old);
                }
            }
        }
        Ok(field)
    }

    /// Invariant assertions accumulated over every fresh solve.
    pub fn invariant_assertions(&self) -> Vec<Assertion> {
        self.invariants.lock().unwrap().clone()
    }

    pub fn audited_fields(&self) -> usize {
        self.audited.lock().unwrap().len()
    }
}
