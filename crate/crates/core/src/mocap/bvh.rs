//! BioVision hierarchy (BVH) parsing and serialization.
//!
//! Supported subset: `Xposition`/`Yposition`/`Zposition` channels in any order,
//! and rotation channels in `XYZ`, `ZXY` or `ZYX` order. Serialized numbers carry
//! six significant digits.

use std::fmt::Write as _;

use nalgebra::Matrix3;

use super::MocapError;
use crate::math::{round_sig6, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Xposition,
    Yposition,
    Zposition,
    Xrotation,
    Yrotation,
    Zrotation,
}

impl Channel {
    fn parse(token: &str) -> Option<Channel> {
        Some(match token {
            "Xposition" => Channel::Xposition,
            "Yposition" => Channel::Yposition,
            "Zposition" => Channel::Zposition,
            "Xrotation" => Channel::Xrotation,
            "Yrotation" => Channel::Yrotation,
            "Zrotation" => Channel::Zrotation,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Channel::Xposition => "Xposition",
            Channel::Yposition => "Yposition",
            Channel::Zposition => "Zposition",
            Channel::Xrotation => "Xrotation",
            Channel::Yrotation => "Yrotation",
            Channel::Zrotation => "Zrotation",
        }
    }

    fn rotation_axis(self) -> Option<usize> {
        match self {
            Channel::Xrotation => Some(0),
            Channel::Yrotation => Some(1),
            Channel::Zrotation => Some(2),
            _ => None,
        }
    }

    fn position_axis(self) -> Option<usize> {
        match self {
            Channel::Xposition => Some(0),
            Channel::Yposition => Some(1),
            Channel::Zposition => Some(2),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BvhJoint {
    pub name: String,
    pub parent: Option<usize>,
    /// Rest offset from the parent joint.
    pub offset: Vec3,
    pub channels: Vec<Channel>,
    pub end_site: Option<Vec3>,
}

/// A parsed motion clip: joint hierarchy plus per-frame channel values.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionClip {
    pub joints: Vec<BvhJoint>,
    pub frame_time: f64,
    /// One row per frame, channels concatenated in hierarchy order.
    pub frames: Vec<Vec<f64>>,
}

impl MotionClip {
    pub fn num_channels(&self) -> usize {
        self.joints.iter().map(|j| j.channels.len()).sum()
    }

    pub fn num_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joints.iter().position(|j| j.name == name)
    }

    /// Offset of the joint's first channel within a frame row.
    pub fn channel_offset(&self, joint: usize) -> usize {
        self.joints[..joint].iter().map(|j| j.channels.len()).sum()
    }

    /// Local rotation of `joint` at `frame`, composing Euler channels in listed order.
    pub fn joint_rotation(&self, frame: usize, joint: usize) -> Matrix3<f64> {
        let start = self.channel_offset(joint);
        let values = &self.frames[frame][start..start + self.joints[joint].channels.len()];
        let mut r = Matrix3::identity();
        for (ch, v) in self.joints[joint].channels.iter().zip(values) {
            if let Some(axis) = ch.rotation_axis() {
                r *= axis_rotation(axis, v.to_radians());
            }
        }
        r
    }

    /// Position channel values of `joint` at `frame` (zero where absent).
    pub fn joint_position(&self, frame: usize, joint: usize) -> Vec3 {
        let start = self.channel_offset(joint);
        let values = &self.frames[frame][start..start + self.joints[joint].channels.len()];
        let mut p = Vec3::zeros();
        for (ch, v) in self.joints[joint].channels.iter().zip(values) {
            if let Some(axis) = ch.position_axis() {
                p[axis] = *v;
            }
        }
        p
    }

    /// Rounds every numeric field to six significant digits.
    pub fn rounded(&self) -> MotionClip {
        let r3 = |v: &Vec3| v.map(round_sig6);
        MotionClip {
            joints: self
                .joints
                .iter()
                .map(|j| BvhJoint {
                    offset: r3(&j.offset),
                    end_site: j.end_site.as_ref().map(r3),
                    ..j.clone()
                })
                .collect(),
            frame_time: round_sig6(self.frame_time),
            frames: self
                .frames
                .iter()
                .map(|f| f.iter().map(|v| round_sig6(*v)).collect())
                .collect(),
        }
    }
}

pub(crate) fn axis_rotation(axis: usize, angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    match axis {
        0 => Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c),
        1 => Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c),
        _ => Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
    }
}

struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let items = text
            .lines()
            .enumerate()
            .flat_map(|(i, line)| line.split_whitespace().map(move |t| (i + 1, t)))
            .collect();
        Tokens { items, pos: 0 }
    }

    fn line(&self) -> usize {
        self.items
            .get(self.pos)
            .or_else(|| self.items.last())
            .map(|t| t.0)
            .unwrap_or(1)
    }

    fn next(&mut self) -> Result<(usize, &'a str), MocapError> {
        let t = self.items.get(self.pos).copied().ok_or_else(|| MocapError::Syntax {
            line: self.line(),
            message: "unexpected end of file".into(),
        })?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, word: &str) -> Result<(), MocapError> {
        let (line, t) = self.next()?;
        if t == word {
            Ok(())
        } else {
            Err(MocapError::Syntax {
                line,
                message: format!("expected `{word}`, found `{t}`"),
            })
        }
    }

    fn number(&mut self) -> Result<f64, MocapError> {
        let (line, t) = self.next()?;
        t.parse::<f64>().map_err(|_| MocapError::Syntax {
            line,
            message: format!("expected a number, found `{t}`"),
        })
    }

    fn vec3(&mut self) -> Result<Vec3, MocapError> {
        Ok(Vec3::new(self.number()?, self.number()?, self.number()?))
    }

    fn peek(&self) -> Option<&'a str> {
        self.items.get(self.pos).map(|t| t.1)
    }
}

fn check_rotation_order(name: &str, channels: &[Channel], line: usize) -> Result<(), MocapError> {
    let order: String = channels
        .iter()
        .filter_map(|c| c.rotation_axis())
        .map(|a| ['X', 'Y', 'Z'][a])
        .collect();
    match order.as_str() {
        "" | "XYZ" | "ZXY" | "ZYX" => Ok(()),
        other => Err(MocapError::UnsupportedChannel {
            line,
            token: format!("rotation order {other} on joint {name}"),
        }),
    }
}

fn parse_joint(
    tokens: &mut Tokens<'_>,
    parent: Option<usize>,
    joints: &mut Vec<BvhJoint>,
) -> Result<(), MocapError> {
    let (_, name) = tokens.next()?;
    tokens.expect("{")?;
    tokens.expect("OFFSET")?;
    let offset = tokens.vec3()?;
    let mut channels = Vec::new();
    if tokens.peek() == Some("CHANNELS") {
        let (line, _) = tokens.next()?;
        let n = tokens.number()?;
        if n < 0.0 || n.fract() != 0.0 {
            return Err(MocapError::Syntax {
                line,
                message: format!("invalid channel count {n}"),
            });
        }
        for _ in 0..n as usize {
            let (line, t) = tokens.next()?;
            let ch = Channel::parse(t).ok_or_else(|| MocapError::UnsupportedChannel {
                line,
                token: t.to_string(),
            })?;
            channels.push(ch);
        }
        check_rotation_order(name, &channels, line)?;
    }
    let index = joints.len();
    joints.push(BvhJoint {
        name: name.to_string(),
        parent,
        offset,
        channels,
        end_site: None,
    });
    loop {
        let (line, t) = tokens.next()?;
        match t {
            "JOINT" => parse_joint(tokens, Some(index), joints)?,
            "End" => {
                tokens.expect("Site")?;
                tokens.expect("{")?;
                tokens.expect("OFFSET")?;
                joints[index].end_site = Some(tokens.vec3()?);
                tokens.expect("}")?;
            }
            "}" => return Ok(()),
            other => {
                return Err(MocapError::Syntax {
                    line,
                    message: format!("unexpected token `{other}` in joint {name}"),
                })
            }
        }
    }
}

/// Parses BVH text into a [`MotionClip`].
pub fn parse_bvh(text: &str) -> Result<MotionClip, MocapError> {
    let mut tokens = Tokens::new(text);
    tokens.expect("HIERARCHY")?;
    tokens.expect("ROOT")?;
    let mut joints = Vec::new();
    parse_joint(&mut tokens, None, &mut joints)?;
    tokens.expect("MOTION")?;
    tokens.expect("Frames:")?;
    let frame_line = tokens.line();
    let n_frames = tokens.number()?;
    if n_frames < 0.0 || n_frames.fract() != 0.0 {
        return Err(MocapError::Syntax {
            line: frame_line,
            message: format!("invalid frame count {n_frames}"),
        });
    }
    tokens.expect("Frame")?;
    tokens.expect("Time:")?;
    let time_line = tokens.line();
    let frame_time = tokens.number()?;
    if frame_time <= 0.0 || !frame_time.is_finite() {
        return Err(MocapError::Syntax {
            line: time_line,
            message: format!("frame time must be positive, found {frame_time}"),
        });
    }
    let n_channels: usize = joints.iter().map(|j| j.channels.len()).sum();

    // Motion rows are line-oriented: one frame per non-empty line.
    let motion_start_line = tokens.items.get(tokens.pos).map(|t| t.0);
    let mut frames = Vec::with_capacity(n_frames as usize);
    if let Some(start) = motion_start_line {
        for (i, line) in text.lines().enumerate().skip(start - 1) {
            let values: Vec<&str> = line.split_whitespace().collect();
            if values.is_empty() {
                continue;
            }
            let frame = frames.len();
            if values.len() != n_channels {
                return Err(MocapError::ChannelCount {
                    frame,
                    line: i + 1,
                    expected: n_channels,
                    found: values.len(),
                });
            }
            let row = values
                .iter()
                .map(|v| {
                    v.parse::<f64>().map_err(|_| MocapError::Syntax {
                        line: i + 1,
                        message: format!("frame {frame}: expected a number, found `{v}`"),
                    })
                })
                .collect::<Result<Vec<f64>, _>>()?;
            frames.push(row);
        }
    }
    if frames.len() != n_frames as usize {
        return Err(MocapError::FrameCount {
            declared: n_frames as usize,
            found: frames.len(),
        });
    }
    Ok(MotionClip {
        joints,
        frame_time,
        frames,
    })
}

fn fmt6(x: f64) -> String {
    let r = round_sig6(x);
    if r == 0.0 {
        "0".to_string()
    } else {
        format!("{r}")
    }
}

/// Writes a clip as BVH text with six significant digits per number.
pub fn write_bvh(clip: &MotionClip) -> String {
    let mut out = String::from("HIERARCHY\n");
    fn joint(clip: &MotionClip, j: usize, depth: usize, out: &mut String) {
        let pad = "  ".repeat(depth);
        let kw = if depth == 0 { "ROOT" } else { "JOINT" };
        let jt = &clip.joints[j];
        let o = jt.offset;
        let _ = writeln!(out, "{pad}{kw} {}", jt.name);
        let _ = writeln!(out, "{pad}{{");
        let _ = writeln!(out, "{pad}  OFFSET {} {} {}", fmt6(o.x), fmt6(o.y), fmt6(o.z));
        if !jt.channels.is_empty() {
            let names: Vec<&str> = jt.channels.iter().map(|c| c.name()).collect();
            let _ = writeln!(out, "{pad}  CHANNELS {} {}", names.len(), names.join(" "));
        }
        for (c, child) in clip.joints.iter().enumerate() {
            if child.parent == Some(j) {
                joint(clip, c, depth + 1, out);
            }
        }
        if let Some(e) = jt.end_site {
            let _ = writeln!(out, "{pad}  End Site");
            let _ = writeln!(out, "{pad}  {{");
            let _ = writeln!(out, "{pad}    OFFSET {} {} {}", fmt6(e.x), fmt6(e.y), fmt6(e.z));
            let _ = writeln!(out, "{pad}  }}");
        }
        let _ = writeln!(out, "{pad}}}");
    }
    joint(clip, 0, 0, &mut out);
    let _ = writeln!(out, "MOTION");
    let _ = writeln!(out, "Frames: {}", clip.frames.len());
    let _ = writeln!(out, "Frame Time: {}", fmt6(clip.frame_time));
    for f in &clip.frames {
        let row: Vec<String> = f.iter().map(|v| fmt6(*v)).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_JOINT: &str = "HIERARCHY
ROOT hips
{
  OFFSET 0 0 0
  CHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation
  JOINT knee
  {
    OFFSET 0 -40.5 0
    CHANNELS 3 Zrotation Xrotation Yrotation
    End Site
    {
      OFFSET 0 -42 0
    }
  }
}
MOTION
Frames: 1
Frame Time: 0.0333333
1.5 90 -2 10 20 30 0 45 0
";

    #[test]
    fn parses_hand_written_clip() {
        let clip = parse_bvh(TWO_JOINT).unwrap();
        assert_eq!(clip.joints.len(), 2);
        assert_eq!(clip.joints[1].parent, Some(0));
        assert_eq!(clip.joints[1].offset, Vec3::new(0.0, -40.5, 0.0));
        assert_eq!(clip.joints[1].end_site, Some(Vec3::new(0.0, -42.0, 0.0)));
        assert_eq!(clip.num_channels(), 9);
        assert_eq!(clip.frames, vec![vec![1.5, 90.0, -2.0, 10.0, 20.0, 30.0, 0.0, 45.0, 0.0]]);
        assert_eq!(clip.frame_time, 0.0333333);
        assert_eq!(clip.joint_position(0, 0), Vec3::new(1.5, 90.0, -2.0));
        assert_eq!(
            clip.joints[0].channels[3..],
            [Channel::Zrotation, Channel::Xrotation, Channel::Yrotation]
        );
    }

    #[test]
    fn root_rotation_composes_in_channel_order() {
        let clip = parse_bvh(TWO_JOINT).unwrap();
        let expected = axis_rotation(2, 10f64.to_radians())
            * axis_rotation(0, 20f64.to_radians())
            * axis_rotation(1, 30f64.to_radians());
        assert!((clip.joint_rotation(0, 0) - expected).abs().max() < 1e-15);
    }

    #[test]
    fn zero_frames_is_valid() {
        let text = TWO_JOINT.replace("Frames: 1", "Frames: 0").replace("1.5 90 -2 10 20 30 0 45 0\n", "");
        let clip = parse_bvh(&text).unwrap();
        assert_eq!(clip.num_frames(), 0);
    }

    #[test]
    fn wrong_value_count_names_the_frame() {
        let text = TWO_JOINT.replace("Frames: 1", "Frames: 2") + "1 2 3\n";
        match parse_bvh(&text) {
            Err(MocapError::ChannelCount { frame, expected, found, .. }) => {
                assert_eq!((frame, expected, found), (1, 9, 3));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unsupported_tokens_rejected() {
        let text = TWO_JOINT.replace("CHANNELS 3 Zrotation Xrotation Yrotation", "CHANNELS 3 Yrotation Xrotation Zrotation");
        assert!(matches!(parse_bvh(&text), Err(MocapError::UnsupportedChannel { .. })));
        let text = TWO_JOINT.replace("CHANNELS 3 Zrotation", "CHANNELS 3 Wrotation");
        assert!(matches!(parse_bvh(&text), Err(MocapError::UnsupportedChannel { .. })));
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let text = TWO_JOINT.replace("OFFSET 0 -40.5 0", "OFFSET 0 abc 0");
        match parse_bvh(&text) {
            Err(MocapError::Syntax { line, .. }) => assert_eq!(line, 8),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn write_then_parse_round_trips() {
        let clip = parse_bvh(TWO_JOINT).unwrap();
        let again = parse_bvh(&write_bvh(&clip)).unwrap();
        assert_eq!(again, clip.rounded());
    }
}
