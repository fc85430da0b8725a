use std::fmt;

/// Tensor extents, outermost dimension first. Always non-empty, every extent
/// at least 1.
#[derive(Clone, PartialEq, Eq, Debug, Hash)]
pub struct Shape(Vec<usize>);

impl Shape {
    pub fn new(dims: impl Into<Vec<usize>>) -> Self {
        let dims = dims.into();
        assert!(!dims.is_empty(), "shape must have at least one dimension");
        assert!(dims.iter().all(|&d| d >= 1), "shape extents must be >= 1");
        Shape(dims)
    }

    pub fn scalar() -> Self {
        Shape(vec![1])
    }

    pub fn vector(n: usize) -> Self {
        Shape::new([n])
    }

    pub fn matrix(rows: usize, cols: usize) -> Self {
        Shape::new([rows, cols])
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn count(&self) -> usize {
        self.0.iter().product()
    }

    pub fn is_scalar(&self) -> bool {
        self.count() == 1
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|d| d.to_string()).collect();
        write!(f, "{}", parts.join("x"))
    }
}

impl From<&[usize]> for Shape {
    fn from(dims: &[usize]) -> Self {
        Shape::new(dims.to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn count_is_product_of_extents() {
        assert_eq!(Shape::new([2, 3, 4]).count(), 24);
        assert_eq!(Shape::scalar().count(), 1);
    }

    #[test]
    #[should_panic]
    fn empty_shape_rejected() {
        let _ = Shape::new(Vec::new());
    }

    #[test]
    #[should_panic]
    fn zero_extent_rejected() {
        let _ = Shape::new([3, 0]);
    }

    #[test]
    fn display_uses_x_separator() {
        assert_eq!(Shape::new([5, 15, 3]).to_string(), "5x15x3");
    }
}
