//! Luma-only ingestion of Y4M streams, headerless planar 4:2:0 YUV and
//! binary PGM stills.
//!
//! Readers are incremental: each call yields one frame and consumes exactly
//! the bytes that frame declares, so trailing data in the underlying reader
//! is left in place.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;

use nrvq_core::LumaPlane;
use thiserror::Error;

const Y4M_SIGNATURE: &[u8] = b"YUV4MPEG2";
const FRAME_MARKER: &[u8] = b"FRAME";
const MAX_HEADER_LEN: usize = 4096;

#[derive(Debug, Error)]
pub enum VideoError {
    #[error("missing YUV4MPEG2 signature")]
    BadSignature,
    #[error("stream header has no {0} parameter")]
    MissingDimension(char),
    #[error("malformed stream header: {0}")]
    MalformedHeader(String),
    #[error("unsupported chroma format {0:?}; only 4:2:0 is accepted")]
    UnsupportedChroma(String),
    #[error("unsupported bit depth in chroma tag {0:?}; only 8-bit is accepted")]
    UnsupportedBitDepth(String),
    #[error("frame {index}: expected FRAME marker")]
    BadFrameMarker { index: usize },
    #[error("frame {index}: stream ends mid-frame")]
    TruncatedFrame { index: usize },
    #[error("file size {len} is not a multiple of the {frame_bytes}-byte frame size")]
    SizeMismatch { len: u64, frame_bytes: u64 },
    #[error("not a binary PGM (P5) file")]
    BadMagic,
    #[error("unsupported PGM maxval {0}; only 255 is accepted")]
    UnsupportedMaxval(u32),
    #[error("malformed PGM header: {0}")]
    MalformedPgm(String),
    #[error(transparent)]
    Plane(#[from] nrvq_core::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl VideoError {
    pub fn is_io(&self) -> bool {
        matches!(self, VideoError::Io(_))
    }
}

pub type Result<T> = std::result::Result<T, VideoError>;

/// 4:2:0 chroma siting variants; all share the same plane layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chroma {
    C420,
    C420Jpeg,
    C420Mpeg2,
    C420Paldv,
}

impl Chroma {
    pub fn tag(self) -> &'static str {
        match self {
            Chroma::C420 => "420",
            Chroma::C420Jpeg => "420jpeg",
            Chroma::C420Mpeg2 => "420mpeg2",
            Chroma::C420Paldv => "420paldv",
        }
    }

    fn parse(tag: &str) -> Result<Chroma> {
        match tag {
            "420" => return Ok(Chroma::C420),
            "420jpeg" => return Ok(Chroma::C420Jpeg),
            "420mpeg2" => return Ok(Chroma::C420Mpeg2),
            "420paldv" => return Ok(Chroma::C420Paldv),
            "420p8" => return Ok(Chroma::C420),
            _ => {}
        }
        if let Some(depth) = tag.strip_prefix("420p") {
            if depth.parse::<u32>().is_ok() {
                return Err(VideoError::UnsupportedBitDepth(tag.to_owned()));
            }
        }
        Err(VideoError::UnsupportedChroma(tag.to_owned()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VideoGeometry {
    pub width: usize,
    pub height: usize,
    pub fps_num: u32,
    pub fps_den: u32,
    pub chroma: Chroma,
    pub bit_depth: u8,
}

impl VideoGeometry {
    /// 8-bit 4:2:0 geometry.
    pub fn new(width: usize, height: usize, fps_num: u32, fps_den: u32) -> Self {
        VideoGeometry { width, height, fps_num, fps_den, chroma: Chroma::C420, bit_depth: 8 }
    }

    pub fn luma_bytes(&self) -> usize {
        self.width * self.height
    }

    /// Two chroma planes of `ceil(w/2) × ceil(h/2)` each.
    pub fn chroma_bytes(&self) -> usize {
        2 * self.width.div_ceil(2) * self.height.div_ceil(2)
    }

    pub fn frame_bytes(&self) -> usize {
        self.luma_bytes() + self.chroma_bytes()
    }
}

/// Frames of one stream, in presentation order.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameStream {
    pub geometry: VideoGeometry,
    pub frames: Vec<LumaPlane>,
}

impl FrameStream {
    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }
}

fn parse_number<T: std::str::FromStr>(value: &str, what: &str) -> Result<T> {
    value.parse().map_err(|_| VideoError::MalformedHeader(format!("bad {what} {value:?}")))
}

fn parse_ratio(value: &str, what: &str) -> Result<(u32, u32)> {
    let (n, d) = value.split_once(':').ok_or_else(|| VideoError::MalformedHeader(format!("bad {what} {value:?}")))?;
    Ok((parse_number(n, what)?, parse_number(d, what)?))
}

/// Parses the stream header up to and including its newline. Returns the
/// geometry and the number of header bytes consumed.
pub fn parse_y4m_header(bytes: &[u8]) -> Result<(VideoGeometry, usize)> {
    if !bytes.starts_with(Y4M_SIGNATURE) {
        return Err(VideoError::BadSignature);
    }
    let end = bytes
        .iter()
        .take(MAX_HEADER_LEN)
        .position(|&b| b == b'\n')
        .ok_or_else(|| VideoError::MalformedHeader("no terminating newline".into()))?;
    let line = std::str::from_utf8(&bytes[Y4M_SIGNATURE.len()..end])
        .map_err(|_| VideoError::MalformedHeader("header is not ASCII".into()))?;
    if !line.is_empty() && !line.starts_with(' ') {
        return Err(VideoError::BadSignature);
    }

    let (mut width, mut height, mut fps) = (None, None, None);
    let mut chroma = Chroma::C420;
    for token in line.split(' ').filter(|t| !t.is_empty()) {
        let (tag, value) = token.split_at(1);
        match tag {
            "W" => width = Some(parse_number::<usize>(value, "width")?),
            "H" => height = Some(parse_number::<usize>(value, "height")?),
            "F" => fps = Some(parse_ratio(value, "frame rate")?),
            "A" => {
                parse_ratio(value, "pixel aspect")?;
            }
            "C" => chroma = Chroma::parse(value)?,
            // Interlacing and extension tags do not affect the plane layout.
            _ => {}
        }
    }
    let width = width.filter(|&w| w > 0).ok_or(VideoError::MissingDimension('W'))?;
    let height = height.filter(|&h| h > 0).ok_or(VideoError::MissingDimension('H'))?;
    let (fps_num, fps_den) = fps.ok_or_else(|| VideoError::MalformedHeader("no F parameter".into()))?;
    if fps_num == 0 || fps_den == 0 {
        return Err(VideoError::MalformedHeader("zero frame rate".into()));
    }
    let geometry = VideoGeometry { width, height, fps_num, fps_den, chroma, bit_depth: 8 };
    Ok((geometry, end + 1))
}

/// Reads luma planes from a Y4M stream.
pub struct Y4mReader<R> {
    inner: R,
    geometry: VideoGeometry,
    index: usize,
    done: bool,
}

impl<R: BufRead> Y4mReader<R> {
    pub fn new(mut inner: R) -> Result<Self> {
        let mut header = Vec::new();
        (&mut inner).take(MAX_HEADER_LEN as u64).read_until(b'\n', &mut header)?;
        let (geometry, _) = parse_y4m_header(&header)?;
        Ok(Y4mReader { inner, geometry, index: 0, done: false })
    }

    pub fn geometry(&self) -> VideoGeometry {
        self.geometry
    }

    /// Next frame, `Ok(None)` at a clean end of stream.
    pub fn read_frame(&mut self) -> Result<Option<LumaPlane>> {
        if self.done {
            return Ok(None);
        }
        let result = self.read_frame_inner();
        if !matches!(result, Ok(Some(_))) {
            self.done = true;
        }
        result
    }

    fn read_frame_inner(&mut self) -> Result<Option<LumaPlane>> {
        let index = self.index;
        let mut line = Vec::new();
        (&mut self.inner).take(MAX_HEADER_LEN as u64).read_until(b'\n', &mut line)?;
        if line.is_empty() {
            return Ok(None);
        }
        if !line.starts_with(FRAME_MARKER) {
            return Err(VideoError::BadFrameMarker { index });
        }
        if line.last() != Some(&b'\n') {
            return Err(VideoError::TruncatedFrame { index });
        }
        if !matches!(line[FRAME_MARKER.len()], b' ' | b'\n') {
            return Err(VideoError::BadFrameMarker { index });
        }

        let g = self.geometry;
        let mut luma = vec![0u8; g.luma_bytes()];
        read_exact_or_truncated(&mut self.inner, &mut luma, index)?;
        let skipped = io::copy(&mut (&mut self.inner).take(g.chroma_bytes() as u64), &mut io::sink())?;
        if skipped != g.chroma_bytes() as u64 {
            return Err(VideoError::TruncatedFrame { index });
        }
        self.index += 1;
        Ok(Some(LumaPlane::new(g.width, g.height, luma)?))
    }

    pub fn into_inner(self) -> R {
        self.inner
    }
}

impl<R: BufRead> Iterator for Y4mReader<R> {
    type Item = Result<LumaPlane>;

    fn next(&mut self) -> Option<Self::Item> {
        self.read_frame().transpose()
    }
}

fn read_exact_or_truncated<R: Read>(r: &mut R, buf: &mut [u8], index: usize) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => VideoError::TruncatedFrame { index },
        _ => VideoError::Io(e),
    })
}

/// Reads a whole Y4M stream. Any error discards the frames read so far.
pub fn read_frames<R: BufRead>(reader: R) -> Result<FrameStream> {
    let mut y4m = Y4mReader::new(reader)?;
    let geometry = y4m.geometry();
    let frames = y4m.by_ref().collect::<Result<Vec<_>>>()?;
    Ok(FrameStream { geometry, frames })
}

pub fn open_y4m(path: &Path) -> Result<Y4mReader<BufReader<File>>> {
    Y4mReader::new(BufReader::new(File::open(path)?))
}

/// Writes 8-bit 4:2:0 Y4M with neutral (128) chroma.
pub fn write_y4m<W: Write>(mut out: W, geometry: &VideoGeometry, frames: &[LumaPlane]) -> io::Result<()> {
    writeln!(
        out,
        "YUV4MPEG2 W{} H{} F{}:{} Ip A1:1 C{}",
        geometry.width,
        geometry.height,
        geometry.fps_num,
        geometry.fps_den,
        geometry.chroma.tag()
    )?;
    let chroma = vec![128u8; geometry.chroma_bytes()];
    for f in frames {
        if f.width() != geometry.width || f.height() != geometry.height {
            return Err(io::Error::new(io::ErrorKind::InvalidInput, "frame does not match stream geometry"));
        }
        out.write_all(b"FRAME\n")?;
        out.write_all(f.samples())?;
        out.write_all(&chroma)?;
    }
    Ok(())
}

/// Headerless planar 4:2:0 reader with a known frame count.
pub struct RawYuvReader<R> {
    inner: R,
    geometry: VideoGeometry,
    frame_count: usize,
    index: usize,
}

impl<R: Read> RawYuvReader<R> {
    /// `total_len` is the byte length of the input; it must be a whole
    /// number of frames.
    pub fn new(inner: R, geometry: VideoGeometry, total_len: u64) -> Result<Self> {
        if geometry.width == 0 || geometry.height == 0 {
            return Err(VideoError::MissingDimension(if geometry.width == 0 { 'W' } else { 'H' }));
        }
        let frame_bytes = geometry.frame_bytes() as u64;
        if !total_len.is_multiple_of(frame_bytes) {
            return Err(VideoError::SizeMismatch { len: total_len, frame_bytes });
        }
        Ok(RawYuvReader { inner, geometry, frame_count: (total_len / frame_bytes) as usize, index: 0 })
    }

    pub fn geometry(&self) -> VideoGeometry {
        self.geometry
    }

    pub fn frame_count(&self) -> usize {
        self.frame_count
    }

    pub fn read_frame(&mut self) -> Result<Option<LumaPlane>> {
        if self.index >= self.frame_count {
            return Ok(None);
        }
        let g = self.geometry;
        let index = self.index;
        // Stop yielding after any failure.
        self.index = self.frame_count;
        let mut luma = vec![0u8; g.luma_bytes()];
        read_exact_or_truncated(&mut self.inner, &mut luma, index)?;
        let skipped = io::copy(&mut (&mut self.inner).take(g.chroma_bytes() as u64), &mut io::sink())?;
        if skipped != g.chroma_bytes() as u64 {
            return Err(VideoError::TruncatedFrame { index });
        }
        self.index = index + 1;
        Ok(Some(LumaPlane::new(g.width, g.height, luma)?))
    }
}

impl<R: Read> Iterator for RawYuvReader<R> {
    type Item = Result<LumaPlane>;

    fn next(&mut self) -> Option<Self::Item> {
        self.read_frame().transpose()
    }
}

pub fn open_raw_yuv(path: &Path, geometry: VideoGeometry) -> Result<RawYuvReader<BufReader<File>>> {
    let file = File::open(path)?;
    let len = file.metadata()?.len();
    RawYuvReader::new(BufReader::new(file), geometry, len)
}

pub fn read_raw_yuv(path: &Path, geometry: VideoGeometry) -> Result<FrameStream> {
    let frames = open_raw_yuv(path, geometry)?.collect::<Result<Vec<_>>>()?;
    Ok(FrameStream { geometry, frames })
}

fn pgm_token<I: Iterator<Item = io::Result<u8>>>(bytes: &mut I, what: &str) -> Result<u32> {
    let mut token = String::new();
    loop {
        let b = match bytes.next() {
            Some(b) => b?,
            None => return Err(VideoError::MalformedPgm(format!("missing {what}"))),
        };
        if b == b'#' && token.is_empty() {
            loop {
                match bytes.next() {
                    Some(Ok(b'\n')) | None => break,
                    Some(Ok(_)) => {}
                    Some(Err(e)) => return Err(e.into()),
                }
            }
        } else if b.is_ascii_whitespace() {
            if !token.is_empty() {
                break;
            }
        } else if b.is_ascii_digit() {
            token.push(b as char);
        } else {
            return Err(VideoError::MalformedPgm(format!("unexpected byte in {what}")));
        }
    }
    token.parse().map_err(|_| VideoError::MalformedPgm(format!("bad {what}")))
}

/// Reads a binary (P5) 8-bit PGM image. Header comments are skipped.
pub fn read_pgm<R: BufRead>(mut reader: R) -> Result<LumaPlane> {
    let mut magic = [0u8; 2];
    reader.read_exact(&mut magic).map_err(|_| VideoError::BadMagic)?;
    if &magic != b"P5" {
        return Err(VideoError::BadMagic);
    }
    let (width, height, maxval) = {
        // The single whitespace byte after maxval terminates its token.
        let mut bytes = reader.by_ref().bytes();
        let w = pgm_token(&mut bytes, "width")? as usize;
        let h = pgm_token(&mut bytes, "height")? as usize;
        (w, h, pgm_token(&mut bytes, "maxval")?)
    };
    if maxval != 255 {
        return Err(VideoError::UnsupportedMaxval(maxval));
    }
    let mut samples = vec![0u8; width * height];
    read_exact_or_truncated(&mut reader, &mut samples, 0)?;
    Ok(LumaPlane::new(width, height, samples)?)
}

pub fn read_pgm_file(path: &Path) -> Result<LumaPlane> {
    read_pgm(BufReader::new(File::open(path)?))
}

pub fn write_pgm<W: Write>(mut out: W, plane: &LumaPlane) -> io::Result<()> {
    write!(out, "P5\n{} {}\n255\n", plane.width(), plane.height())?;
    out.write_all(plane.samples())
}
