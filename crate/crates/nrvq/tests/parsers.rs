use std::io::{BufRead, Cursor, Read};

use nrvq::video::{
    parse_y4m_header, read_frames, read_pgm, write_pgm, write_y4m, Chroma, RawYuvReader, VideoError, VideoGeometry,
    Y4mReader,
};
use nrvq_core::LumaPlane;
use proptest::prelude::*;

/// Two 4×2 frames; luma counts up, chroma is marked so a reader that
/// confuses planes returns wrong samples.
fn golden_y4m() -> Vec<u8> {
    let mut b = b"YUV4MPEG2 W4 H2 F25:1 Ip A1:1 C420jpeg\n".to_vec();
    b.extend_from_slice(b"FRAME\n");
    b.extend_from_slice(&[0, 1, 2, 3, 4, 5, 6, 7]);
    b.extend_from_slice(&[0xAA, 0xAA, 0xBB, 0xBB]);
    b.extend_from_slice(b"FRAME Ixyz\n");
    b.extend_from_slice(&[10, 11, 12, 13, 14, 15, 16, 17]);
    b.extend_from_slice(&[0xCC, 0xCC, 0xDD, 0xDD]);
    b
}

#[test]
fn golden_y4m_parses_bit_exact() {
    let stream = read_frames(Cursor::new(golden_y4m())).unwrap();
    assert_eq!(stream.geometry.chroma, Chroma::C420Jpeg);
    assert_eq!((stream.geometry.fps_num, stream.geometry.fps_den), (25, 1));
    assert_eq!(stream.frames.len(), 2);
    assert_eq!(stream.frames[0].samples(), &[0, 1, 2, 3, 4, 5, 6, 7]);
    assert_eq!(stream.frames[1].samples(), &[10, 11, 12, 13, 14, 15, 16, 17]);
    assert_eq!(stream.frames[1].get(3, 1), 17);
}

#[test]
fn odd_geometry_rounds_chroma_up() {
    // 3×3 luma, two 2×2 chroma planes.
    let mut b = b"YUV4MPEG2 W3 H3 F1:1\nFRAME\n".to_vec();
    b.extend(1..=9u8);
    b.extend([200u8; 8]);
    b.extend_from_slice(b"FRAME\n");
    b.extend(11..=19u8);
    b.extend([201u8; 8]);
    let stream = read_frames(Cursor::new(b)).unwrap();
    assert_eq!(stream.frames[1].samples(), &[11, 12, 13, 14, 15, 16, 17, 18, 19]);
}

#[test]
fn golden_raw_yuv_parses_bit_exact() {
    let g = VideoGeometry::new(4, 2, 30, 1);
    let mut b = Vec::new();
    for f in 0..3u8 {
        b.extend((0..8).map(|i| f * 16 + i));
        b.extend([0x80; 4]);
    }
    let reader = RawYuvReader::new(Cursor::new(b.clone()), g, b.len() as u64).unwrap();
    assert_eq!(reader.frame_count(), 3);
    let frames: Vec<LumaPlane> = reader.map(Result::unwrap).collect();
    assert_eq!(frames[2].samples(), &[32, 33, 34, 35, 36, 37, 38, 39]);

    let short = &b[..b.len() - 1];
    assert!(matches!(
        RawYuvReader::new(Cursor::new(short), g, short.len() as u64),
        Err(VideoError::SizeMismatch { len: 35, frame_bytes: 12 })
    ));
}

#[test]
fn truncated_stream_is_reported_at_its_frame() {
    let full = golden_y4m();
    for cut in [full.len() - 1, full.len() - 5, full.len() - 12, full.len() - 14] {
        let err = read_frames(Cursor::new(full[..cut].to_vec())).unwrap_err();
        assert!(matches!(err, VideoError::TruncatedFrame { index: 1 }), "cut {cut}: {err:?}");
    }
    // A claimed frame length larger than the reader's data.
    let g = VideoGeometry::new(4, 2, 30, 1);
    let mut r = RawYuvReader::new(Cursor::new(vec![0u8; 5]), g, 12).unwrap();
    assert!(matches!(r.read_frame(), Err(VideoError::TruncatedFrame { index: 0 })));
    assert!(r.read_frame().unwrap().is_none());
}

#[test]
fn bad_marker_is_typed() {
    let mut b = golden_y4m();
    let pos = b.windows(5).rposition(|w| w == b"FRAME").unwrap();
    b[pos + 4] = b'X';
    assert!(matches!(read_frames(Cursor::new(b)), Err(VideoError::BadFrameMarker { index: 1 })));
    let mut b = golden_y4m();
    let pos = b.windows(5).rposition(|w| w == b"FRAME").unwrap();
    b[pos + 5] = b'S';
    assert!(matches!(read_frames(Cursor::new(b)), Err(VideoError::BadFrameMarker { index: 1 })));
}

#[test]
fn unsupported_chroma_is_typed() {
    for (tag, want_depth) in [("C444", false), ("C422", false), ("Cmono", false), ("C420p10", true)] {
        let header = format!("YUV4MPEG2 W4 H2 F25:1 {tag}\n");
        let err = parse_y4m_header(header.as_bytes()).unwrap_err();
        if want_depth {
            assert!(matches!(err, VideoError::UnsupportedBitDepth(_)), "{tag}");
        } else {
            assert!(matches!(err, VideoError::UnsupportedChroma(_)), "{tag}");
        }
    }
}

#[test]
fn header_errors_are_typed() {
    assert!(matches!(parse_y4m_header(b"YUV4MPEG W4 H2 F1:1\n"), Err(VideoError::BadSignature)));
    assert!(matches!(parse_y4m_header(b"YUV4MPEG2 H2 F1:1\n"), Err(VideoError::MissingDimension('W'))));
    assert!(matches!(parse_y4m_header(b"YUV4MPEG2 W4 F1:1\n"), Err(VideoError::MissingDimension('H'))));
    assert!(matches!(parse_y4m_header(b"YUV4MPEG2 W4 H2\n"), Err(VideoError::MalformedHeader(_))));
    assert!(matches!(parse_y4m_header(b"YUV4MPEG2 W4 H2 Fx:1\n"), Err(VideoError::MalformedHeader(_))));
}

#[test]
fn y4m_write_read_round_trip_is_bit_identical() {
    let stream = read_frames(Cursor::new(golden_y4m())).unwrap();
    let mut out = Vec::new();
    write_y4m(&mut out, &stream.geometry, &stream.frames).unwrap();
    let again = read_frames(Cursor::new(out.clone())).unwrap();
    assert_eq!(again, stream);
    let mut out2 = Vec::new();
    write_y4m(&mut out2, &again.geometry, &again.frames).unwrap();
    assert_eq!(out, out2);
}

#[test]
fn pgm_round_trip_and_comments() {
    let plane = LumaPlane::from_fn(5, 3, |x, y| (x * 40 + y) as u8).unwrap();
    let mut buf = Vec::new();
    write_pgm(&mut buf, &plane).unwrap();
    assert_eq!(read_pgm(&buf[..]).unwrap(), plane);

    let mut commented = b"P5\n# made by hand\n5 3\n# depth\n255\n".to_vec();
    commented.extend_from_slice(plane.samples());
    assert_eq!(read_pgm(&commented[..]).unwrap(), plane);

    assert!(matches!(read_pgm(&b"P2\n1 1\n255\n0"[..]), Err(VideoError::BadMagic)));
    assert!(matches!(read_pgm(&b"P5\n1 1\n65535\n00"[..]), Err(VideoError::UnsupportedMaxval(65535))));
    assert!(matches!(read_pgm(&b"P5\n2 2\n255\n\x01"[..]), Err(VideoError::TruncatedFrame { .. })));
}

fn arb_stream() -> impl Strategy<Value = (VideoGeometry, Vec<LumaPlane>)> {
    (1usize..9, 1usize..9, 1usize..4).prop_flat_map(|(w, h, n)| {
        proptest::collection::vec(proptest::collection::vec(any::<u8>(), w * h), n).prop_map(move |frames| {
            let planes = frames.into_iter().map(|s| LumaPlane::new(w, h, s).unwrap()).collect();
            (VideoGeometry::new(w, h, 24, 1), planes)
        })
    })
}

proptest! {
    #[test]
    fn round_trip_any_stream((geometry, frames) in arb_stream()) {
        let mut buf = Vec::new();
        write_y4m(&mut buf, &geometry, &frames).unwrap();
        let stream = read_frames(Cursor::new(&buf)).unwrap();
        prop_assert_eq!(stream.frames, frames);
    }

    #[test]
    fn reader_leaves_trailing_bytes((geometry, frames) in arb_stream(), tail in proptest::collection::vec(any::<u8>(), 0..32)) {
        let mut buf = Vec::new();
        write_y4m(&mut buf, &geometry, &frames).unwrap();
        let stream_len = buf.len();
        buf.extend_from_slice(&tail);
        let mut reader = Y4mReader::new(Cursor::new(buf)).unwrap();
        for f in &frames {
            prop_assert_eq!(&reader.read_frame().unwrap().unwrap(), f);
        }
        let mut inner = reader.into_inner();
        prop_assert_eq!(inner.position() as usize, stream_len);
        let mut rest = Vec::new();
        inner.read_to_end(&mut rest).unwrap();
        prop_assert_eq!(rest, tail);
    }

    #[test]
    fn raw_reader_stops_at_declared_length((geometry, frames) in arb_stream(), tail in proptest::collection::vec(any::<u8>(), 0..32)) {
        let mut buf = Vec::new();
        for f in &frames {
            buf.extend_from_slice(f.samples());
            buf.extend(std::iter::repeat_n(128u8, geometry.chroma_bytes()));
        }
        let declared = buf.len() as u64;
        buf.extend_from_slice(&tail);
        let mut cursor = Cursor::new(buf);
        let read: Vec<LumaPlane> = RawYuvReader::new(&mut cursor, geometry, declared).unwrap().map(Result::unwrap).collect();
        prop_assert_eq!(read, frames);
        prop_assert_eq!(cursor.position(), declared);
        prop_assert_eq!(cursor.fill_buf().unwrap(), &tail[..]);
    }
}
