//! Class schemes: ids, names, display colors, and merge groups.

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassDef {
    pub id: u8,
    pub name: String,
    pub color: [u8; 3],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeGroup {
    pub name: String,
    pub members: Vec<u8>,
}

/// Ordered class definitions plus named merge groups (e.g. total
/// vegetation = dense + sparse) and a reserved masked sentinel id.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassScheme {
    classes: Vec<ClassDef>,
    merge_groups: Vec<MergeGroup>,
    masked_id: u8,
    mask_color: [u8; 4],
}

impl ClassScheme {
    pub fn new(classes: Vec<ClassDef>, masked_id: u8) -> Result<Self> {
        let scheme = ClassScheme { classes, merge_groups: Vec::new(), masked_id, mask_color: [0, 0, 0, 0] };
        scheme.validate()?;
        Ok(scheme)
    }

    /// Default palette: sand, dense vegetation, sparse vegetation, oyster
    /// raft, debris, not classified, with a total-vegetation merge group.
    pub fn default_coastal() -> Self {
        let classes = vec![
            ClassDef { id: 0, name: "sand".into(), color: [210, 180, 140] },
            ClassDef { id: 1, name: "dense_vegetation".into(), color: [0, 100, 0] },
            ClassDef { id: 2, name: "sparse_vegetation".into(), color: [144, 238, 144] },
            ClassDef { id: 3, name: "oyster_raft".into(), color: [139, 69, 19] },
            ClassDef { id: 4, name: "debris".into(), color: [255, 0, 0] },
            ClassDef { id: 5, name: "not_classified".into(), color: [0, 0, 255] },
        ];
        let mut scheme = ClassScheme::new(classes, 255).unwrap();
        scheme
            .add_merge_group("total_vegetation", vec![1, 2])
            .unwrap();
        scheme
    }

    fn validate(&self) -> Result<()> {
        for (i, c) in self.classes.iter().enumerate() {
            if c.id as usize != i {
                return Err(Error::InvalidScheme(format!(
                    "class ids must be contiguous from 0; position {} has id {}",
                    i, c.id
                )));
            }
            if c.id == self.masked_id {
                return Err(Error::InvalidScheme(format!(
                    "class id {} collides with the masked sentinel",
                    c.id
                )));
            }
        }
        for (i, a) in self.classes.iter().enumerate() {
            for b in &self.classes[i + 1..] {
                if a.color == b.color {
                    return Err(Error::InvalidScheme(format!(
                        "classes {} and {} share color {:?}",
                        a.id, b.id, a.color
                    )));
                }
            }
        }
        for g in &self.merge_groups {
            for &m in &g.members {
                if m == self.masked_id {
                    return Err(Error::InvalidScheme(format!(
                        "merge group {} contains the masked sentinel",
                        g.name
                    )));
                }
                if !self.contains(m) {
                    return Err(Error::InvalidMergeMember(m));
                }
            }
        }
        Ok(())
    }

    pub fn add_merge_group(&mut self, name: &str, members: Vec<u8>) -> Result<()> {
        for &m in &members {
            if m == self.masked_id {
                return Err(Error::InvalidScheme(format!(
                    "merge group {} contains the masked sentinel",
                    name
                )));
            }
            if !self.contains(m) {
                return Err(Error::InvalidMergeMember(m));
            }
        }
        self.merge_groups.push(MergeGroup { name: name.into(), members });
        Ok(())
    }

    pub fn with_color(mut self, id: u8, color: [u8; 3]) -> Result<Self> {
        let c = self
            .classes
            .iter_mut()
            .find(|c| c.id == id)
            .ok_or(Error::LabelOutOfScheme(id))?;
        c.color = color;
        self.validate()?;
        Ok(self)
    }

    pub fn classes(&self) -> &[ClassDef] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn masked_id(&self) -> u8 {
        self.masked_id
    }

    pub fn mask_color(&self) -> [u8; 4] {
        self.mask_color
    }

    pub fn contains(&self, id: u8) -> bool {
        (id as usize) < self.classes.len()
    }

    pub fn color_of(&self, id: u8) -> Option<[u8; 3]> {
        self.classes.get(id as usize).map(|c| c.color)
    }

    pub fn name_of(&self, id: u8) -> Option<&str> {
        self.classes.get(id as usize).map(|c| c.name.as_str())
    }

    pub fn id_of(&self, name: &str) -> Option<u8> {
        self.classes.iter().find(|c| c.name == name).map(|c| c.id)
    }

    pub fn merge_groups(&self) -> &[MergeGroup] {
        &self.merge_groups
    }

    pub fn merge_group(&self, name: &str) -> Option<&MergeGroup> {
        self.merge_groups.iter().find(|g| g.name == name)
    }

    /// The class that receives below-floor pixels, identified by name.
    pub fn unclassified_id(&self) -> Option<u8> {
        self.classes
            .iter()
            .find(|c| {
                let n = c.name.to_ascii_lowercase().replace([' ', '-'], "_");
                n == "not_classified" || n == "unclassified" || n == "notclassified"
            })
            .map(|c| c.id)
    }

    /// Class whose color is nearest in squared Euclidean RGB distance;
    /// ties go to the lowest class id.
    #[inline]
    pub fn nearest_class(&self, rgb: [u8; 3]) -> u8 {
        let mut best = 0u8;
        let mut best_d = u32::MAX;
        for c in &self.classes {
            let d = color_dist2(rgb, c.color);
            if d < best_d {
                best_d = d;
                best = c.id;
            }
        }
        best
    }

    /// Parse the line-oriented scheme config:
    /// `id,name,R,G,B` per class, `merge,<group>,<id>,<id>,...` per group,
    /// optional `masked,<id>`. Blank lines and `#` comments ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut classes = Vec::new();
        let mut merges: Vec<(String, Vec<u8>)> = Vec::new();
        let mut masked_id = 255u8;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = |msg: &str| Error::Parse(format!("scheme line {}: {}", lineno + 1, msg));
            match fields[0] {
                "merge" => {
                    if fields.len() < 3 {
                        return Err(bad("merge record needs a name and at least one id"));
                    }
                    let ids = fields[2..]
                        .iter()
                        .map(|f| f.parse::<u8>().map_err(|_| bad("invalid merge member id")))
                        .collect::<Result<Vec<u8>>>()?;
                    merges.push((fields[1].to_string(), ids));
                }
                "masked" => {
                    if fields.len() != 2 {
                        return Err(bad("masked record needs exactly one id"));
                    }
                    masked_id = fields[1].parse().map_err(|_| bad("invalid masked id"))?;
                }
                _ => {
                    if fields.len() != 5 {
                        return Err(bad("class record needs id,name,R,G,B"));
                    }
                    let id: u8 = fields[0].parse().map_err(|_| bad("invalid class id"))?;
                    let rgb: Vec<u8> = fields[2..5]
                        .iter()
                        .map(|f| f.parse::<u8>().map_err(|_| bad("invalid color component")))
                        .collect::<Result<Vec<u8>>>()?;
                    classes.push(ClassDef {
                        id,
                        name: fields[1].to_string(),
                        color: [rgb[0], rgb[1], rgb[2]],
                    });
                }
            }
        }
        classes.sort_by_key(|c| c.id);
        let mut scheme = ClassScheme::new(classes, masked_id)?;
        for (name, members) in merges {
            scheme.add_merge_group(&name, members)?;
        }
        Ok(scheme)
    }

    /// Render back to the config format `parse` accepts.
    pub fn to_config(&self) -> String {
        let mut out = String::new();
        for c in &self.classes {
            writeln!(out, "{},{},{},{},{}", c.id, c.name, c.color[0], c.color[1], c.color[2]).unwrap();
        }
        for g in &self.merge_groups {
            write!(out, "merge,{}", g.name).unwrap();
            for m in &g.members {
                write!(out, ",{}", m).unwrap();
            }
            out.push('\n');
        }
        writeln!(out, "masked,{}", self.masked_id).unwrap();
        out
    }
}

#[inline]
fn color_dist2(a: [u8; 3], b: [u8; 3]) -> u32 {
    let dr = a[0] as i32 - b[0] as i32;
    let dg = a[1] as i32 - b[1] as i32;
    let db = a[2] as i32 - b[2] as i32;
    (dr * dr + dg * dg + db * db) as u32
}
