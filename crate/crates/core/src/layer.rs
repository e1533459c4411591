use crate::geom::Point;
use crate::standards::ServiceCode;

/// Facility points of one service.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointLayer {
    pub name: String,
    pub service: Option<ServiceCode>,
    pub points: Vec<Point>,
}

impl PointLayer {
    pub fn new(name: impl Into<String>, service: Option<ServiceCode>, points: Vec<Point>) -> Self {
        PointLayer {
            name: name.into(),
            service,
            points,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
