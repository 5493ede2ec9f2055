//! Caching wrapper for embedding providers: an in-run cache keyed by exact
//! text, internally synchronized, so repeated texts never hit the provider
//! twice. Results are independent of batching and cache state.

use std::collections::HashMap;
use std::sync::Mutex;

use super::{EmbeddingBatch, EmbeddingProvider, ProviderError};

pub struct CachingEmbedder<E> {
    inner: E,
    cache: Mutex<HashMap<String, Vec<f64>>>,
    batch_size: usize,
}

impl<E: EmbeddingProvider> CachingEmbedder<E> {
    pub fn new(inner: E) -> Self {
        CachingEmbedder { inner, cache: Mutex::new(HashMap::new()), batch_size: 64 }
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Self {
        self.batch_size = batch_size.max(1);
        self
    }

    pub fn inner(&self) -> &E {
        &self.inner
    }
}

impl<E: EmbeddingProvider> EmbeddingProvider for CachingEmbedder<E> {
    fn embed(&self, texts: &[String]) -> Result<EmbeddingBatch, ProviderError> {
        if texts.is_empty() {
            return Err(ProviderError::EmptyInput);
        }
        // Distinct texts missing from the cache, in first-appearance order.
        let misses: Vec<String> = {
            let cache = self.cache.lock().expect("cache lock");
            let mut seen = Vec::new();
            for t in texts {
                if !cache.contains_key(t) && !seen.contains(t) {
                    seen.push(t.clone());
                }
            }
            seen
        };
        for chunk in misses.chunks(self.batch_size) {
            let batch = self.inner.embed(chunk)?;
            let mut cache = self.cache.lock().expect("cache lock");
            for (text, vector) in chunk.iter().zip(batch.vectors) {
                cache.insert(text.clone(), vector);
            }
        }
        let cache = self.cache.lock().expect("cache lock");
        let vectors: Vec<Vec<f64>> =
            texts.iter().map(|t| cache.get(t).expect("cached").clone()).collect();
        EmbeddingBatch::new(vectors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    /// Counts provider calls and texts; embeds each text to a 2-vector
    /// derived from its length.
    struct Counting {
        calls: AtomicUsize,
        texts: AtomicUsize,
    }

    impl Counting {
        fn new() -> Self {
            Counting { calls: AtomicUsize::new(0), texts: AtomicUsize::new(0) }
        }
    }

    impl EmbeddingProvider for Counting {
        fn embed(&self, texts: &[String]) -> Result<EmbeddingBatch, ProviderError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            self.texts.fetch_add(texts.len(), Ordering::SeqCst);
            EmbeddingBatch::new(texts.iter().map(|t| vec![t.len() as f64, 1.0]).collect())
        }
    }

    fn strings(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn cached_texts_cause_no_additional_provider_calls() {
        let embedder = CachingEmbedder::new(Counting::new());
        embedder.embed(&strings(&["a", "bb"])).unwrap();
        assert_eq!(embedder.inner().texts.load(Ordering::SeqCst), 2);
        let batch = embedder.embed(&strings(&["bb", "a"])).unwrap();
        assert_eq!(embedder.inner().texts.load(Ordering::SeqCst), 2);
        assert_eq!(batch.vectors[0], vec![2.0, 1.0]);
        assert_eq!(batch.vectors[1], vec![1.0, 1.0]);
    }

    #[test]
    fn batching_preserves_input_order() {
        let embedder = CachingEmbedder::new(Counting::new()).with_batch_size(2);
        let texts = strings(&["one", "second", "third-x", "four"]);
        let batch = embedder.embed(&texts).unwrap();
        assert_eq!(batch.vectors.len(), 4);
        for (t, v) in texts.iter().zip(&batch.vectors) {
            assert_eq!(v[0], t.len() as f64);
        }
        assert_eq!(embedder.inner().calls.load(Ordering::SeqCst), 2);
    }

    #[test]
    fn duplicate_texts_within_one_call_are_embedded_once() {
        let embedder = CachingEmbedder::new(Counting::new());
        let batch = embedder.embed(&strings(&["dup", "dup", "dup"])).unwrap();
        assert_eq!(embedder.inner().texts.load(Ordering::SeqCst), 1);
        assert_eq!(batch.vectors.len(), 3);
        assert_eq!(batch.vectors[0], batch.vectors[2]);
    }

    #[test]
    fn empty_input_is_rejected() {
        let embedder = CachingEmbedder::new(Counting::new());
        assert!(matches!(embedder.embed(&[]), Err(ProviderError::EmptyInput)));
    }
}
