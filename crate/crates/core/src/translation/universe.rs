//! Finite, translation-closed image universes, toy classifiers over them, and
//! an exact pushforward oracle for the translational density weights.
//!
//! A universe is generated from periodic tiles: every view of the infinite
//! tiling is an image, so the set is finite and closed under translation, and
//! the uniform distribution on it is translation invariant.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use rand_distr::{Distribution, Normal};

use super::aeg::{TranslationalAeg, TranslationalAegConfig, Variant};
use super::image::{max_valid_epsilon, Pixels, Shift, SourceImage, TranslationSet, ViewKey};
use crate::aeg::{argmax, build_paired_sample, verify_aeg_conditions, Classifier, LabeledExample};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from};

/// One period of a tiled source image.
#[derive(Debug, Clone, PartialEq)]
pub struct Tile {
    pub rows: usize,
    pub cols: usize,
    pub channels: usize,
    pub label: usize,
    /// Row-major `rows × cols × channels` values in `[0, 1]`.
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassifierKind {
    Linear,
    Table,
}

/// A finite set of images with probabilities.
#[derive(Debug, Clone)]
pub struct Universe {
    pub name: String,
    pub images: Vec<SourceImage>,
    pub weights: Vec<f64>,
}

impl Universe {
    pub fn uniform(name: impl Into<String>, images: Vec<SourceImage>) -> Self {
        let w = 1.0 / images.len() as f64;
        Universe {
            name: name.into(),
            weights: vec![w; images.len()],
            images,
        }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }
}

/// Random linear classifier on the flattened view.
#[derive(Debug, Clone)]
pub struct LinearImageClassifier {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

impl LinearImageClassifier {
    pub fn random(classes: usize, view_len: usize, seed: u64) -> Self {
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        let rng = &mut rng_from(seed, &[]);
        let weights = (0..classes)
            .map(|_| (0..view_len).map(|_| normal.sample(rng)).collect())
            .collect();
        LinearImageClassifier {
            weights,
            bias: vec![0.0; classes],
        }
    }
}

impl Classifier<SourceImage> for LinearImageClassifier {
    type Label = usize;

    fn predict(&self, x: &SourceImage) -> usize {
        argmax(&self.logits(x).expect("linear classifier has logits"))
    }

    fn logits(&self, x: &SourceImage) -> Option<Vec<f64>> {
        let view = x.view();
        Some(
            self.weights
                .iter()
                .zip(&self.bias)
                .map(|(w, b)| w.iter().zip(&view).map(|(a, v)| a * v).sum::<f64>() + b)
                .collect(),
        )
    }
}

/// Pseudo-random logits keyed by the exact view bits: an arbitrary lookup
/// table over the universe.
#[derive(Debug, Clone, Copy)]
pub struct TableClassifier {
    pub classes: usize,
    pub seed: u64,
}

impl Classifier<SourceImage> for TableClassifier {
    type Label = usize;

    fn predict(&self, x: &SourceImage) -> usize {
        argmax(&self.logits(x).expect("table classifier has logits"))
    }

    fn logits(&self, x: &SourceImage) -> Option<Vec<f64>> {
        let key = x.view_key();
        let h = derive_seed(self.seed, key.bits());
        Some(
            (0..self.classes)
                .map(|k| (derive_seed(h, &[k as u64]) >> 11) as f64 / (1u64 << 53) as f64)
                .collect(),
        )
    }
}

#[derive(Debug, Clone)]
pub enum ToyClassifier {
    Linear(LinearImageClassifier),
    Table(TableClassifier),
}

impl Classifier<SourceImage> for ToyClassifier {
    type Label = usize;

    fn predict(&self, x: &SourceImage) -> usize {
        match self {
            ToyClassifier::Linear(c) => c.predict(x),
            ToyClassifier::Table(c) => c.predict(x),
        }
    }

    fn logits(&self, x: &SourceImage) -> Option<Vec<f64>> {
        match self {
            ToyClassifier::Linear(c) => c.logits(x),
            ToyClassifier::Table(c) => c.logits(x),
        }
    }
}

/// A universe description: view shape, pad, attack radius, classifier and
/// tiles.
#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub name: String,
    pub view_rows: usize,
    pub view_cols: usize,
    pub pad: u32,
    pub epsilon: u32,
    pub classes: usize,
    pub classifier: ClassifierKind,
    pub classifier_seed: u64,
    pub tiles: Vec<Tile>,
}

impl Fixture {
    pub fn validate(&self) -> Result<()> {
        if self.view_rows == 0 || self.view_cols == 0 {
            return Err(Error::Universe(format!("{}: empty view", self.name)));
        }
        if self.epsilon == 0 || self.epsilon > max_valid_epsilon(self.pad) {
            return Err(Error::EpsilonTooLarge {
                epsilon: self.epsilon,
                max: max_valid_epsilon(self.pad),
                pad: self.pad,
            });
        }
        if self.classes < 2 {
            return Err(Error::Universe(format!("{}: need at least 2 classes", self.name)));
        }
        if self.tiles.is_empty() {
            return Err(Error::Universe(format!("{}: no tiles", self.name)));
        }
        let channels = self.tiles[0].channels;
        for (i, t) in self.tiles.iter().enumerate() {
            if t.channels != channels {
                return Err(Error::Universe(format!("{}: tile {i} has {} channels, expected {channels}", self.name, t.channels)));
            }
            if t.label >= self.classes {
                return Err(Error::Universe(format!("{}: tile {i} label {} out of range", self.name, t.label)));
            }
            if t.data.len() != t.rows * t.cols * t.channels {
                return Err(Error::Universe(format!("{}: tile {i} has {} values", self.name, t.data.len())));
            }
        }
        Ok(())
    }

    pub fn channels(&self) -> usize {
        self.tiles[0].channels
    }

    /// Every view of every tiling, each with its own centered padded source.
    pub fn universe(&self) -> Result<Universe> {
        self.validate()?;
        let p = self.pad as usize;
        let (rows, cols) = (self.view_rows + 2 * p, self.view_cols + 2 * p);
        let mut images = Vec::new();
        for tile in &self.tiles {
            let c = tile.channels;
            for ry in 0..tile.rows {
                for rx in 0..tile.cols {
                    let mut data = Vec::with_capacity(rows * cols * c);
                    for r in 0..rows {
                        for col in 0..cols {
                            let (tr, tc) = ((r + ry) % tile.rows, (col + rx) % tile.cols);
                            let at = (tr * tile.cols + tc) * c;
                            data.extend_from_slice(&tile.data[at..at + c]);
                        }
                    }
                    images.push(SourceImage::new(Pixels::new(rows, cols, c, data)?, self.pad, tile.label)?);
                }
            }
        }
        Ok(Universe::uniform(self.name.clone(), images))
    }

    pub fn classifier(&self) -> ToyClassifier {
        match self.classifier {
            ClassifierKind::Linear => ToyClassifier::Linear(LinearImageClassifier::random(
                self.classes,
                self.view_rows * self.view_cols * self.channels(),
                self.classifier_seed,
            )),
            ClassifierKind::Table => ToyClassifier::Table(TableClassifier {
                classes: self.classes,
                seed: self.classifier_seed,
            }),
        }
    }

    pub fn parse(text: &str, source: &str) -> Result<Fixture> {
        let err = |line: usize, reason: String| Error::Parse {
            location: format!("{source}:{line}"),
            reason,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let mut name = None;
        let mut view = None;
        let mut pad = None;
        let mut epsilon = None;
        let mut classes = None;
        let mut classifier = None;
        let mut tiles = Vec::new();
        fn num<T: std::str::FromStr>(tok: Option<&str>, what: &str) -> std::result::Result<T, String> {
            let tok = tok.ok_or_else(|| format!("missing {what}"))?;
            tok.parse().map_err(|_| format!("invalid {what} `{tok}`"))
        }
        while let Some((no, line)) = lines.next() {
            let mut toks = line.split_whitespace();
            let key = toks.next().unwrap_or_default();
            let parsed: std::result::Result<(), String> = (|| {
                match key {
                    "universe" => name = Some(toks.next().ok_or("missing name")?.to_string()),
                    "view" => view = Some((num(toks.next(), "view rows")?, num(toks.next(), "view cols")?)),
                    "pad" => pad = Some(num(toks.next(), "pad")?),
                    "epsilon" => epsilon = Some(num(toks.next(), "epsilon")?),
                    "classes" => classes = Some(num(toks.next(), "classes")?),
                    "classifier" => {
                        let kind = match toks.next() {
                            Some("linear") => ClassifierKind::Linear,
                            Some("table") => ClassifierKind::Table,
                            other => return Err(format!("unknown classifier {other:?}")),
                        };
                        classifier = Some((kind, num(toks.next(), "classifier seed")?));
                    }
                    "tile" => {
                        let rows: usize = num(toks.next(), "tile rows")?;
                        let cols: usize = num(toks.next(), "tile cols")?;
                        let channels: usize = num(toks.next(), "tile channels")?;
                        let label: usize = num(toks.next(), "tile label")?;
                        tiles.push(Tile { rows, cols, channels, label, data: Vec::new() });
                    }
                    other => return Err(format!("unknown key `{other}`")),
                }
                if toks.next().is_some() {
                    return Err("trailing tokens".into());
                }
                Ok(())
            })();
            parsed.map_err(|r| err(no, r))?;
            if key == "tile" {
                let tile = tiles.last_mut().expect("just pushed");
                for r in 0..tile.rows {
                    let (row_no, row) = lines
                        .next()
                        .ok_or_else(|| err(no, format!("tile ends after {r} of {} rows", tile.rows)))?;
                    let values: Vec<f64> = row
                        .split_whitespace()
                        .map(|t| t.parse().map_err(|_| err(row_no, format!("invalid pixel `{t}`"))))
                        .collect::<Result<_>>()?;
                    if values.len() != tile.cols * tile.channels {
                        return Err(err(
                            row_no,
                            format!("expected {} values, found {}", tile.cols * tile.channels, values.len()),
                        ));
                    }
                    if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                        return Err(err(row_no, format!("pixel {v} outside [0, 1]")));
                    }
                    tile.data.extend(values);
                }
            }
        }
        let missing = |what: &str| err(0, format!("missing `{what}` line"));
        let (view_rows, view_cols) = view.ok_or_else(|| missing("view"))?;
        let (classifier, classifier_seed) = classifier.ok_or_else(|| missing("classifier"))?;
        let fixture = Fixture {
            name: name.ok_or_else(|| missing("universe"))?,
            view_rows,
            view_cols,
            pad: pad.ok_or_else(|| missing("pad"))?,
            epsilon: epsilon.ok_or_else(|| missing("epsilon"))?,
            classes: classes.ok_or_else(|| missing("classes"))?,
            classifier,
            classifier_seed,
            tiles,
        };
        fixture.validate()?;
        Ok(fixture)
    }

    pub fn load(path: &Path) -> Result<Fixture> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Fixture::parse(&text, &path.display().to_string())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let kind = match self.classifier {
            ClassifierKind::Linear => "linear",
            ClassifierKind::Table => "table",
        };
        let _ = writeln!(s, "universe {}", self.name);
        let _ = writeln!(s, "view {} {}", self.view_rows, self.view_cols);
        let _ = writeln!(s, "pad {}", self.pad);
        let _ = writeln!(s, "epsilon {}", self.epsilon);
        let _ = writeln!(s, "classes {}", self.classes);
        let _ = writeln!(s, "classifier {kind} {}", self.classifier_seed);
        for t in &self.tiles {
            let _ = writeln!(s, "tile {} {} {} {}", t.rows, t.cols, t.channels, t.label);
            for row in t.data.chunks(t.cols * t.channels) {
                let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
                let _ = writeln!(s, "{}", cells.join(" "));
            }
        }
        s
    }
}

/// Index of every view in the universe; fails on duplicate views.
fn index_views(universe: &Universe) -> Result<HashMap<ViewKey, usize>> {
    let mut index = HashMap::with_capacity(universe.len());
    for (i, img) in universe.images.iter().enumerate() {
        if let Some(j) = index.insert(img.view_key(), i) {
            return Err(Error::Universe(format!("{}: images {j} and {i} have the same view", universe.name)));
        }
    }
    Ok(index)
}

/// `ρ(x) / ρ_g(x)` for every misclassified universe element (`None` for
/// correctly classified ones), from the exact pushforward of the universe
/// distribution through `g`. Random variants are pushed forward as the exact
/// uniform mixture over their candidates.
///
/// The universe must be closed under translations up to `2ε`, since the
/// weights depend on neighbors of neighbors, and the `ε`-neighbors of each
/// image must be pairwise distinct, since the weights count them.
pub fn brute_force_pushforward<F>(
    universe: &Universe,
    f: &F,
    cfg: &TranslationalAegConfig,
) -> Result<Vec<Option<f64>>>
where
    F: Classifier<SourceImage, Label = usize> + ?Sized,
{
    if universe.is_empty() || universe.weights.len() != universe.len() {
        return Err(Error::Universe(format!("{}: weights do not match images", universe.name)));
    }
    let index = index_views(universe)?;
    let lookup = |img: &SourceImage| {
        index
            .get(&img.view_key())
            .copied()
            .ok_or_else(|| Error::Universe(format!("{}: not closed under translation", universe.name)))
    };
    let reach = TranslationSet::new(2 * cfg.epsilon)?;
    for img in &universe.images {
        let mut seen = vec![lookup(img)?];
        for &v in reach.vectors() {
            let j = lookup(&img.translate(v)?)?;
            if v.max_norm() <= cfg.epsilon as i64 {
                seen.push(j);
            }
        }
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Universe(format!(
                "{}: translations within {} alias each other",
                universe.name, cfg.epsilon
            )));
        }
    }

    let g = TranslationalAeg::new(*cfg, f)?;
    let mut pushed = vec![0.0; universe.len()];
    for (i, (img, &rho)) in universe.images.iter().zip(&universe.weights).enumerate() {
        if f.predict(img) != img.label() {
            pushed[i] += rho;
        } else if cfg.variant.is_deterministic() {
            pushed[lookup(&g.perturb_image(img, i)?)?] += rho;
        } else {
            let candidates = g.random_candidates(img)?;
            let share = rho / candidates.len() as f64;
            for c in &candidates {
                pushed[lookup(c)?] += share;
            }
        }
    }
    Ok(universe
        .images
        .iter()
        .zip(&universe.weights)
        .zip(&pushed)
        .map(|((img, &rho), &mass)| (f.predict(img) != img.label()).then(|| rho / mass))
        .collect())
}

/// Outcome of checking one variant on one universe.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub universe: String,
    pub variant: Variant,
    pub epsilon: u32,
    pub images: usize,
    pub misclassified: usize,
    pub successful_adversarial: usize,
    /// Largest `|density_weight - pushforward ratio|`.
    pub max_weight_error: f64,
    pub min_t: f64,
    pub max_t: f64,
    /// Largest weight of a successful adversarial example; 0 when none.
    pub max_successful_weight: f64,
    pub condition_violations: usize,
    /// Misclassified images whose weight is below 1 although the universe is
    /// density preserving.
    pub weights_below_one: usize,
}

/// Tolerance for weight agreement with the pushforward.
pub const ORACLE_TOLERANCE: f64 = 1e-12;

impl OracleReport {
    pub fn passes(&self) -> bool {
        let bounded = !self.variant.is_deterministic()
            || (self.min_t >= -1.0 && self.max_t <= 0.5 && self.max_successful_weight <= 0.5);
        self.max_weight_error <= ORACLE_TOLERANCE && self.condition_violations == 0 && bounded
    }
}

/// Checks one variant on a universe: weights against the pushforward, the
/// range of the differences `T_i` over the whole universe, and G1/G2.
pub fn check_variant<F>(universe: &Universe, f: &F, cfg: &TranslationalAegConfig) -> Result<OracleReport>
where
    F: Classifier<SourceImage, Label = usize>,
{
    let expected = brute_force_pushforward(universe, f, cfg)?;
    let g = TranslationalAeg::new(*cfg, f)?;
    let mut max_weight_error: f64 = 0.0;
    let mut weights_below_one = 0;
    for (img, want) in universe.images.iter().zip(&expected) {
        if let Some(want) = want {
            let got = g.weight(img)?;
            max_weight_error = max_weight_error.max((got - want).abs());
            weights_below_one += usize::from(got < 1.0);
        }
    }
    let sample: Vec<LabeledExample<SourceImage, usize>> = universe
        .images
        .iter()
        .map(|img| LabeledExample::new(img.clone(), img.label()))
        .collect();
    let truth = |img: &SourceImage| img.label();
    let condition_violations = verify_aeg_conditions(f, &truth, &g, &sample, None).len();
    let obs = build_paired_sample(f, &g, &sample)?;
    let (mut min_t, mut max_t, mut max_successful_weight) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    let mut successful_adversarial = 0;
    for o in &obs {
        min_t = min_t.min(o.t_value);
        max_t = max_t.max(o.t_value);
        if o.original_loss == 0.0 && o.adversarial_loss > 0.0 {
            successful_adversarial += 1;
            max_successful_weight = max_successful_weight.max(o.weight.unwrap_or(0.0));
        }
    }
    Ok(OracleReport {
        universe: universe.name.clone(),
        variant: cfg.variant,
        epsilon: cfg.epsilon,
        images: universe.len(),
        misclassified: expected.iter().filter(|e| e.is_some()).count(),
        successful_adversarial,
        max_weight_error,
        min_t,
        max_t,
        max_successful_weight,
        condition_violations,
        weights_below_one,
    })
}

/// Runs [`check_variant`] for every variant on a fixture.
pub fn check_fixture(fixture: &Fixture, seed: u64) -> Result<Vec<OracleReport>> {
    let universe = fixture.universe()?;
    let f = fixture.classifier();
    Variant::ALL
        .iter()
        .map(|&variant| {
            let cfg = TranslationalAegConfig { variant, epsilon: fixture.epsilon, seed };
            check_variant(&universe, &f, &cfg)
        })
        .collect()
}

/// Fixture with uniformly random pixels quantized to `1/100`.
#[allow(clippy::too_many_arguments)]
pub fn random_fixture(
    name: &str,
    view: (usize, usize),
    pad: u32,
    epsilon: u32,
    classes: usize,
    classifier: ClassifierKind,
    tiles: &[(usize, usize, usize, usize)],
    seed: u64,
) -> Fixture {
    use rand::Rng;
    let rng = &mut rng_from(seed, &[]);
    Fixture {
        name: name.into(),
        view_rows: view.0,
        view_cols: view.1,
        pad,
        epsilon,
        classes,
        classifier,
        classifier_seed: derive_seed(seed, &[1]),
        tiles: tiles
            .iter()
            .map(|&(rows, cols, channels, label)| Tile {
                rows,
                cols,
                channels,
                label,
                data: (0..rows * cols * channels)
                    .map(|_| rng.random_range(0..=100) as f64 / 100.0)
                    .collect(),
            })
            .collect(),
    }
}

/// Shift taking universe element `from` onto `to`, when one exists within
/// `radius`.
pub fn shift_between(from: &SourceImage, to: &SourceImage, radius: u32) -> Option<Shift> {
    let r = radius as i64;
    (-r..=r)
        .flat_map(|dy| (-r..=r).map(move |dx| Shift::new(dy, dx)))
        .find(|&v| from.translate(v).is_ok_and(|t| t == *to))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(classifier: ClassifierKind, epsilon: u32, seed: u64) -> Fixture {
        random_fixture("t", (2, 3), 3 * epsilon, epsilon, 3, classifier, &[(5, 6, 1, 0), (6, 5, 1, 1)], seed)
    }

    #[test]
    fn universe_is_closed_and_sized() {
        let fx = small(ClassifierKind::Table, 1, 1);
        let u = fx.universe().unwrap();
        assert_eq!(u.len(), 60);
        assert!((u.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let keys = index_views(&u).unwrap();
        for img in &u.images {
            for &v in TranslationSet::new(3).unwrap().vectors() {
                assert!(keys.contains_key(&img.translate(v).unwrap().view_key()));
            }
        }
    }

    #[test]
    fn text_round_trip() {
        let fx = small(ClassifierKind::Linear, 1, 2);
        let again = Fixture::parse(&fx.to_text(), "mem").unwrap();
        assert_eq!(again, fx);
        let with_comments = format!("# header\n\n{}# trailing\n", fx.to_text().replace("pad 3", "pad 3  # margin"));
        assert_eq!(Fixture::parse(&with_comments, "mem").unwrap(), fx);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let bad = "universe u\nview 2 2\npad 3\nepsilon 1\nclasses 2\nclassifier table 1\ntile 2 2 1 0\n0.1 0.2\n0.3\n";
        match Fixture::parse(bad, "f") {
            Err(Error::Parse { location, .. }) => assert_eq!(location, "f:9"),
            other => panic!("{other:?}"),
        }
        let unknown = "universe u\nshape 2\n";
        assert!(matches!(Fixture::parse(unknown, "f"), Err(Error::Parse { .. })));
        let too_far = "universe u\nview 2 2\npad 3\nepsilon 2\nclasses 2\nclassifier table 1\ntile 1 1 1 0\n0.5\n";
        assert!(matches!(Fixture::parse(too_far, "f"), Err(Error::EpsilonTooLarge { .. })));
    }

    #[test]
    fn aliasing_and_duplicates_are_rejected() {
        // Period 2 < 2ε + 1 aliases translations.
        let fx = random_fixture("alias", (2, 2), 3, 1, 2, ClassifierKind::Table, &[(2, 2, 1, 0)], 4);
        let u = fx.universe().unwrap();
        let cfg = TranslationalAegConfig { variant: Variant::Nearest, epsilon: 1, seed: 0 };
        assert!(matches!(brute_force_pushforward(&u, &fx.classifier(), &cfg), Err(Error::Universe(_))));
        // A universe missing translations is not closed.
        let fx = small(ClassifierKind::Table, 1, 5);
        let mut u = fx.universe().unwrap();
        u.images.truncate(10);
        u.weights = vec![0.1; 10];
        assert!(matches!(brute_force_pushforward(&u, &fx.classifier(), &cfg), Err(Error::Universe(_))));
    }

    #[test]
    fn always_correct_classifier_leaves_distribution_unchanged() {
        struct Oracle;
        impl Classifier<SourceImage> for Oracle {
            type Label = usize;
            fn predict(&self, x: &SourceImage) -> usize {
                x.label()
            }
            fn logits(&self, x: &SourceImage) -> Option<Vec<f64>> {
                let mut l = vec![0.0; 3];
                l[x.label()] = 1.0;
                Some(l)
            }
        }
        let u = small(ClassifierKind::Table, 1, 6).universe().unwrap();
        for variant in [Variant::Strongest, Variant::Nearest] {
            let cfg = TranslationalAegConfig { variant, epsilon: 1, seed: 0 };
            let table = brute_force_pushforward(&u, &Oracle, &cfg).unwrap();
            assert!(table.iter().all(Option::is_none));
        }
    }

    #[test]
    fn weights_match_pushforward_on_random_universes() {
        for seed in 0..6 {
            for kind in [ClassifierKind::Linear, ClassifierKind::Table] {
                let eps = 1 + (seed % 2) as u32;
                let fx = small(kind, eps, seed);
                for report in check_fixture(&fx, seed).unwrap() {
                    assert!(report.passes(), "{report:?}");
                    assert!(report.misclassified > 0);
                }
            }
        }
    }

    #[test]
    fn density_preservation_does_not_force_unit_weights() {
        // The universe distribution is uniform and translation invariant, yet
        // deterministic variants produce weights of 1/2 and below.
        let fx = small(ClassifierKind::Table, 1, 3);
        let reports = check_fixture(&fx, 0).unwrap();
        let det: Vec<_> = reports.iter().filter(|r| r.variant.is_deterministic()).collect();
        assert!(det.iter().all(|r| r.weights_below_one > 0), "{det:?}");
        assert!(det.iter().any(|r| r.max_successful_weight == 0.5));
    }

    #[test]
    fn strongest_and_nearest_succeed_on_the_same_images() {
        let fx = small(ClassifierKind::Linear, 2, 8);
        let u = fx.universe().unwrap();
        let f = fx.classifier();
        let mk = |variant| TranslationalAegConfig { variant, epsilon: 2, seed: 0 };
        let gs = TranslationalAeg::new(mk(Variant::Strongest), &f).unwrap();
        let gn = TranslationalAeg::new(mk(Variant::Nearest), &f).unwrap();
        let mut successes = 0;
        for (i, img) in u.images.iter().enumerate() {
            let s = f.predict(&gs.perturb_image(img, i).unwrap()) != img.label();
            let n = f.predict(&gn.perturb_image(img, i).unwrap()) != img.label();
            assert_eq!(s, n);
            successes += usize::from(s && f.predict(img) == img.label());
        }
        assert!(successes > 0);
    }

    #[test]
    fn shift_between_finds_translations() {
        let u = small(ClassifierKind::Table, 1, 9).universe().unwrap();
        let a = &u.images[0];
        let b = a.translate(Shift::new(1, -1)).unwrap();
        assert_eq!(shift_between(a, &b, 1), Some(Shift::new(1, -1)));
    }
}
