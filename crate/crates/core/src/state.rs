use std::fmt::Debug;

/// A point `s` of the component space.
pub trait Component: Clone + PartialOrd + Debug + Send + Sync {
    fn is_nan(&self) -> bool;
}

impl Component for f64 {
    fn is_nan(&self) -> bool {
        f64::is_nan(*self)
    }
}

impl Component for usize {
    fn is_nan(&self) -> bool {
        false
    }
}

/// A point `(k, s)` of the variable-dimensional space: an ordered list of `k`
/// components. `k = 0` is the empty state.
#[derive(Clone, Debug, PartialEq)]
pub struct VarDimState<S = f64> {
    components: Vec<S>,
}

impl<S: Component> VarDimState<S> {
    pub fn empty() -> Self {
        Self {
            components: Vec::new(),
        }
    }

    pub fn new(components: Vec<S>) -> Self {
        Self { components }
    }

    /// Model order `k`.
    pub fn order(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[S] {
        &self.components
    }

    pub fn into_components(self) -> Vec<S> {
        self.components
    }

    /// Nondecreasing order.
    pub fn is_sorted(&self) -> bool {
        self.components.windows(2).all(|w| w[0] <= w[1])
    }

    /// `s ⊕_i s*`: a copy with `value` inserted before position `index`
    /// (0-based, `index <= k`).
    pub fn inserted(&self, index: usize, value: S) -> Self {
        assert!(
            index <= self.order(),
            "insertion index {index} out of range"
        );
        let mut components = Vec::with_capacity(self.order() + 1);
        components.extend_from_slice(&self.components[..index]);
        components.push(value);
        components.extend_from_slice(&self.components[index..]);
        Self { components }
    }

    /// `s_{-i}`: a copy with the component at `index` removed, plus that value.
    pub fn removed(&self, index: usize) -> (Self, S) {
        assert!(index < self.order(), "removal index {index} out of range");
        let mut components = self.components.clone();
        let value = components.remove(index);
        (Self { components }, value)
    }

    /// Copy with the component at `index` replaced.
    pub fn replaced(&self, index: usize, value: S) -> Self {
        let mut components = self.components.clone();
        components[index] = value;
        Self { components }
    }

    pub fn has_nan(&self) -> bool {
        self.components.iter().any(Component::is_nan)
    }
}

impl<S: Component> Default for VarDimState<S> {
    fn default() -> Self {
        Self::empty()
    }
}
