use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Per-source table of pseudo-random wavelengths consulted when neither
/// endpoint of a pair has a wavelength yet. Entries are read round-robin.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WavelengthRom {
    entries: Vec<Vec<usize>>,
    cursor: Vec<usize>,
}

impl WavelengthRom {
    /// One random permutation of all wavelengths per source, so a scan
    /// of a full row sees every wavelength once.
    pub fn random(n_sources: usize, n_wavelengths: usize, seed: u64) -> Self {
        // Decorrelate from the traffic stream, which uses the plain seed.
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f7a_b1e5);
        let entries = (0..n_sources)
            .map(|_| {
                let mut row: Vec<usize> = (0..n_wavelengths).collect();
                row.shuffle(&mut rng);
                row
            })
            .collect();
        Self::from_entries(entries)
    }

    pub fn from_entries(entries: Vec<Vec<usize>>) -> Self {
        assert!(entries.iter().all(|row| !row.is_empty()), "every ROM row needs an entry");
        let cursor = vec![0; entries.len()];
        WavelengthRom { entries, cursor }
    }

    pub fn row(&self, source: usize) -> &[usize] {
        &self.entries[source]
    }

    /// Next wavelength for `source`, advancing its read pointer.
    pub fn next(&mut self, source: usize) -> usize {
        let row = &self.entries[source];
        let c = self.cursor[source];
        self.cursor[source] = (c + 1) % row.len();
        row[c]
    }

    /// First entry from the read pointer on that satisfies `usable`, looking
    /// at most one full row ahead. The pointer moves past the entry taken,
    /// or by one if none qualifies.
    pub fn next_usable(&mut self, source: usize, mut usable: impl FnMut(usize) -> bool) -> Option<usize> {
        let row = &self.entries[source];
        let start = self.cursor[source];
        for k in 0..row.len() {
            let c = (start + k) % row.len();
            if usable(row[c]) {
                self.cursor[source] = (c + 1) % row.len();
                return Some(row[c]);
            }
        }
        self.cursor[source] = (start + 1) % row.len();
        None
    }
}
