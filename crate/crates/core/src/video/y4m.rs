//! YUV4MPEG2 reader/writer, restricted to 8-bit 4:2:0.

use std::io::{Read, Write};

use super::{chroma_dims, Frame, Plane, Result, VideoChunk, VideoError};

const MAGIC: &[u8] = b"YUV4MPEG2";
const FRAME_TAG: &[u8] = b"FRAME";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Y4mHeader {
    pub width: usize,
    pub height: usize,
    pub fps: f64,
}

pub fn read_y4m<R: Read>(mut reader: R) -> Result<VideoChunk> {
    let mut buf = Vec::new();
    reader.read_to_end(&mut buf)?;
    parse_y4m(&buf)
}

pub fn parse_y4m(bytes: &[u8]) -> Result<VideoChunk> {
    if !bytes.starts_with(MAGIC) || !matches!(bytes.get(MAGIC.len()), Some(b' ' | b'\n')) {
        return Err(VideoError::BadMagic);
    }
    let header_end = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| VideoError::BadHeader("unterminated header line".into()))?;
    let header = parse_header(&bytes[MAGIC.len()..header_end])?;

    let (w, h) = (header.width, header.height);
    let (cw, ch) = chroma_dims(w, h);
    let luma_len = w * h;
    let chroma_len = cw * ch;

    let mut pos = header_end + 1;
    let mut frames = Vec::new();
    while pos < bytes.len() {
        let index = frames.len();
        let rest = &bytes[pos..];
        let line_end = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or(VideoError::TruncatedFrame(index))?;
        if !rest[..line_end].starts_with(FRAME_TAG) {
            return Err(VideoError::BadHeader(format!("frame {index} lacks FRAME marker")));
        }
        pos += line_end + 1;
        let need = luma_len + 2 * chroma_len;
        if bytes.len() - pos < need {
            return Err(VideoError::TruncatedFrame(index));
        }
        let y = Plane::new(w, h, bytes[pos..pos + luma_len].to_vec())?;
        pos += luma_len;
        let u = Plane::new(cw, ch, bytes[pos..pos + chroma_len].to_vec())?;
        pos += chroma_len;
        let v = Plane::new(cw, ch, bytes[pos..pos + chroma_len].to_vec())?;
        pos += chroma_len;
        frames.push(Frame::with_chroma(y, u, v)?);
    }
    VideoChunk::new(header.fps, frames)
}

fn parse_header(line: &[u8]) -> Result<Y4mHeader> {
    let text = std::str::from_utf8(line).map_err(|_| VideoError::BadHeader("not ASCII".into()))?;
    let mut width = None;
    let mut height = None;
    let mut fps = None;
    for tok in text.split_ascii_whitespace() {
        let (tag, val) = tok.split_at(1);
        match tag {
            "W" => width = Some(parse_dim(val)?),
            "H" => height = Some(parse_dim(val)?),
            "F" => fps = Some(parse_ratio(val)?),
            "C" => check_colorspace(val)?,
            // interlacing, aspect ratio and extensions do not affect the payload
            "I" | "A" | "X" => {}
            _ => return Err(VideoError::BadHeader(format!("unknown tag {tok}"))),
        }
    }
    Ok(Y4mHeader {
        width: width.ok_or_else(|| VideoError::BadHeader("missing W".into()))?,
        height: height.ok_or_else(|| VideoError::BadHeader("missing H".into()))?,
        fps: fps.ok_or_else(|| VideoError::BadHeader("missing F".into()))?,
    })
}

fn parse_dim(v: &str) -> Result<usize> {
    match v.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(VideoError::BadHeader(format!("bad dimension {v}"))),
    }
}

fn parse_ratio(v: &str) -> Result<f64> {
    let bad = || VideoError::BadHeader(format!("bad frame rate {v}"));
    let (n, d) = v.split_once(':').ok_or_else(bad)?;
    let n: u64 = n.parse().map_err(|_| bad())?;
    let d: u64 = d.parse().map_err(|_| bad())?;
    if n == 0 || d == 0 {
        return Err(bad());
    }
    Ok(n as f64 / d as f64)
}

fn check_colorspace(v: &str) -> Result<()> {
    match v {
        "420" | "420jpeg" | "420paldv" | "420mpeg2" => Ok(()),
        other => Err(VideoError::UnsupportedFormat(format!("C{other}"))),
    }
}

fn fps_ratio(fps: f64) -> (u64, u64) {
    if (fps - fps.round()).abs() < 1e-9 {
        return (fps.round() as u64, 1);
    }
    let ntsc = fps * 1001.0;
    if (ntsc - ntsc.round()).abs() < 1e-6 {
        return (ntsc.round() as u64, 1001);
    }
    ((fps * 1000.0).round() as u64, 1000)
}

/// Writes `chunk` as C420 Y4M. Frames without chroma get neutral (128) chroma.
pub fn write_y4m<W: Write>(chunk: &VideoChunk, mut w: W) -> Result<()> {
    let (n, d) = fps_ratio(chunk.fps());
    writeln!(w, "YUV4MPEG2 W{} H{} F{n}:{d} Ip A1:1 C420", chunk.width(), chunk.height())?;
    let (cw, ch) = chroma_dims(chunk.width(), chunk.height());
    let neutral = vec![128u8; cw * ch];
    for f in chunk.frames() {
        w.write_all(b"FRAME\n")?;
        w.write_all(f.luma.data())?;
        match &f.chroma {
            Some((u, v)) => {
                w.write_all(u.data())?;
                w.write_all(v.data())?;
            }
            None => {
                w.write_all(&neutral)?;
                w.write_all(&neutral)?;
            }
        }
    }
    Ok(())
}

pub fn to_y4m_bytes(chunk: &VideoChunk) -> Vec<u8> {
    let mut out = Vec::new();
    write_y4m(chunk, &mut out).expect("writing to a Vec cannot fail");
    out
}
