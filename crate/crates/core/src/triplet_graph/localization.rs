//! Instruction synthesis from instance segmentation annotations.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::filters::BoundingBox;
use crate::image::Mask;

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub category: String,
    pub bbox: BoundingBox<f64>,
    pub mask: Mask,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationAnnotation {
    image_ref: String,
    width: usize,
    height: usize,
    instances: Vec<Instance>,
}

impl SegmentationAnnotation {
    pub fn new(image_ref: impl Into<String>, width: usize, height: usize, instances: Vec<Instance>) -> Result<Self> {
        for (i, inst) in instances.iter().enumerate() {
            let b = &inst.bbox;
            if b.x_min < 0.0 || b.y_min < 0.0 || b.x_max > width as f64 || b.y_max > height as f64 {
                return Err(Error::invalid(format!("instance {i} box outside {width}x{height}")));
            }
            if inst.mask.dims() != (width, height) {
                return Err(Error::DimensionMismatch(format!(
                    "instance {i} mask is {:?}, image is {width}x{height}",
                    inst.mask.dims()
                )));
            }
        }
        Ok(Self {
            image_ref: image_ref.into(),
            width,
            height,
            instances,
        })
    }

    pub fn image_ref(&self) -> &str {
        &self.image_ref
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalizationMode {
    KeepOnly,
    RemoveBackground,
}

/// Tie band for spatial qualifiers, as a fraction of the image extent.
pub const TIE_BAND: f64 = 0.05;

fn ordinal(n: usize) -> &'static str {
    match n {
        2 => "second",
        3 => "third",
        4 => "fourth",
        5 => "fifth",
        _ => "next",
    }
}

/// Rank-based qualifier along one axis, or `None` when another instance's
/// centre lies within the tie band.
fn axis_qualifier(
    target: usize,
    members: &[usize],
    coord: impl Fn(usize) -> f64,
    band: f64,
    (low, high): (&str, &str),
) -> Option<String> {
    let c = coord(target);
    if members
        .iter()
        .any(|&j| j != target && (coord(j) - c).abs() <= band)
    {
        return None;
    }
    let n = members.len();
    let rank = members.iter().filter(|&&j| coord(j) < c).count();
    Some(match (n, rank) {
        (2, 0) => low.to_string(),
        (2, _) => high.to_string(),
        (_, 0) => format!("{low}most"),
        (_, r) if r == n - 1 => format!("{high}most"),
        (_, r) if n % 2 == 1 && r == n / 2 => "middle".to_string(),
        (_, r) if r < n / 2 => format!("{} from the {low}", ordinal(r + 1)),
        (_, r) => format!("{} from the {high}", ordinal(n - r)),
    })
}

fn area_qualifier(target: usize, members: &[usize], area: impl Fn(usize) -> f64) -> String {
    let a = area(target);
    let larger = members.iter().filter(|&&j| area(j) > a).count();
    match larger {
        0 => "largest".to_string(),
        r if r == members.len() - 1 => "smallest".to_string(),
        r => format!("{} largest", ordinal(r + 1)),
    }
}

fn plural(category: &str) -> String {
    if category.ends_with('s') || category.ends_with('x') || category.ends_with("ch") {
        format!("{category}es")
    } else {
        format!("{category}s")
    }
}

/// Instruction naming the selected instances, with a left/right, top/bottom
/// or size qualifier whenever the category is ambiguous in the image.
pub fn generate_localization_instruction(
    ann: &SegmentationAnnotation,
    selected: &[usize],
    mode: LocalizationMode,
) -> Result<String> {
    if selected.is_empty() {
        return Err(Error::invalid("no instances selected"));
    }
    if let Some(&bad) = selected.iter().find(|&&i| i >= ann.instances.len()) {
        return Err(Error::invalid(format!(
            "instance index {bad} out of range ({} instances)",
            ann.instances.len()
        )));
    }
    let mut by_category: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, inst) in ann.instances.iter().enumerate() {
        by_category.entry(inst.category.as_str()).or_default().push(i);
    }

    let mut phrases: Vec<String> = Vec::new();
    let mut done: Vec<&str> = Vec::new();
    for &s in selected {
        let cat = ann.instances[s].category.as_str();
        if done.contains(&cat) {
            continue;
        }
        done.push(cat);
        let members = &by_category[cat];
        let mut chosen: Vec<usize> = selected.iter().copied().filter(|&i| ann.instances[i].category == cat).collect();
        chosen.sort_unstable();
        chosen.dedup();
        if members.len() == 1 {
            phrases.push(format!("the {cat}"));
            continue;
        }
        if chosen.len() == members.len() {
            phrases.push(format!("the {}", plural(cat)));
            continue;
        }
        for &i in &chosen {
            let cx = |j: usize| ann.instances[j].bbox.center().0;
            let cy = |j: usize| ann.instances[j].bbox.center().1;
            let q = axis_qualifier(i, members, cx, TIE_BAND * ann.width as f64, ("left", "right"))
                .or_else(|| axis_qualifier(i, members, cy, TIE_BAND * ann.height as f64, ("top", "bottom")))
                .unwrap_or_else(|| area_qualifier(i, members, |j| ann.instances[j].bbox.area()));
            phrases.push(format!("the {q} {cat}"));
        }
    }
    let joined = match phrases.len() {
        1 => phrases.remove(0),
        _ => {
            let last = phrases.pop().expect("non-empty");
            format!("{} and {last}", phrases.join(", "))
        }
    };
    Ok(match mode {
        LocalizationMode::KeepOnly => format!("Preserve exclusively {joined}."),
        LocalizationMode::RemoveBackground => {
            format!("Remove the background and all objects except {joined}.")
        }
    })
}
