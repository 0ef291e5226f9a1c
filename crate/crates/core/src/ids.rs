//! Interning of external user/item keys to dense indices.

use std::collections::HashMap;

/// Bijective map between external string keys and dense `u32` indices,
/// assigned in first-seen order starting at 0.
#[derive(Debug, Default, Clone)]
pub struct IdMap {
    forward: HashMap<String, u32>,
    reverse: Vec<String>,
}

impl IdMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the existing index for `key`, or assigns the next dense index.
    pub fn intern(&mut self, key: &str) -> u32 {
        if let Some(&idx) = self.forward.get(key) {
            return idx;
        }
        let idx = self.reverse.len() as u32;
        self.forward.insert(key.to_string(), idx);
        self.reverse.push(key.to_string());
        idx
    }

    pub fn get(&self, key: &str) -> Option<u32> {
        self.forward.get(key).copied()
    }

    pub fn resolve(&self, index: u32) -> Option<&str> {
        self.reverse.get(index as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.reverse.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reverse.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn first_intern_assigns_zero() {
        let mut map = IdMap::new();
        assert_eq!(map.intern("u1"), 0);
    }

    #[test]
    fn intern_is_idempotent() {
        let mut map = IdMap::new();
        assert_eq!(map.intern("u1"), 0);
        assert_eq!(map.intern("u1"), 0);
        assert_eq!(map.len(), 1);
    }

    #[test]
    fn indices_dense_in_first_seen_order() {
        let mut map = IdMap::new();
        let a = map.intern("u1");
        let b = map.intern("u2");
        let c = map.intern("u1");
        assert_eq!((a, b, c), (0, 1, 0));
    }

    proptest! {
        #[test]
        fn roundtrip_is_bijective(keys in proptest::collection::vec("[a-z]{1,6}", 1..100)) {
            let mut map = IdMap::new();
            for k in &keys {
                let idx = map.intern(k);
                prop_assert_eq!(map.resolve(idx).unwrap(), k.as_str());
                prop_assert_eq!(map.get(k), Some(idx));
            }
            for idx in 0..map.len() as u32 {
                let key = map.resolve(idx).unwrap().to_string();
                prop_assert_eq!(map.get(&key), Some(idx));
            }
        }
    }
}
