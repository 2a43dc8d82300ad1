// SPDX-License-Identifier: MIT OR Apache-2.0

use logicspace::matstore::{
    decode, encode, read_matrix, write_matrix, Dtype, MatrixHeader, HEADER_LEN,
};
use logicspace::IoError;
use logicspace_core::rng::GaussianSource;
use logicspace_core::Matrix;
use proptest::prelude::*;

#[test]
fn single_value_file_is_33_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one.mvls");
    write_matrix(&path, &Matrix::new(1, 1, vec![2.0]).unwrap(), Dtype::F64).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(bytes.len(), 33);
    assert_eq!(&bytes[..4], b"MVLS");
    assert_eq!(&bytes[4..8], &1u32.to_le_bytes());
    assert_eq!(bytes[8], 1);
    assert_eq!(&bytes[9..17], &1u64.to_le_bytes());
    assert_eq!(&bytes[17..25], &1u64.to_le_bytes());
    assert_eq!(&bytes[25..], &2.0f64.to_le_bytes());
}

#[test]
fn zeros_payload_is_all_zero_bytes() {
    let bytes = encode(&Matrix::zeros(2, 3), Dtype::F64).unwrap();
    assert_eq!(bytes.len(), HEADER_LEN + 48);
    assert!(bytes[HEADER_LEN..].iter().all(|b| *b == 0));
}

#[test]
fn bad_magic_is_format_error() {
    let mut bytes = encode(&Matrix::zeros(2, 2), Dtype::F64).unwrap();
    bytes[..4].copy_from_slice(b"XXXX");
    assert!(matches!(decode(&bytes), Err(IoError::Format(_))));
}

#[test]
fn short_payload_names_expected_and_actual_bytes() {
    let header = MatrixHeader {
        version: 1,
        dtype: Dtype::F64,
        n_rows: 10,
        n_cols: 10,
    };
    let mut bytes = header.to_bytes().to_vec();
    bytes.extend(std::iter::repeat_n(0u8, 50 * 8));
    let err = decode(&bytes).unwrap_err();
    let msg = err.to_string();
    assert!(matches!(err, IoError::Format(_)));
    assert!(msg.contains("800") && msg.contains("400"), "{msg}");
}

#[test]
fn large_matrix_round_trips_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("big.mvls");
    let m = GaussianSource::new(3).matrix(64, 4096).unwrap();
    write_matrix(&path, &m, Dtype::F64).unwrap();
    let back = read_matrix(&path).unwrap();
    assert_eq!(back.shape(), (64, 4096));
    assert!(back
        .as_slice()
        .iter()
        .zip(m.as_slice())
        .all(|(a, b)| a.to_bits() == b.to_bits()));
}

#[test]
fn float32_storage_rounds_to_single_precision() {
    let m = GaussianSource::new(9).matrix(5, 7).unwrap();
    let back = decode(&encode(&m, Dtype::F32).unwrap()).unwrap();
    for (a, b) in back.as_slice().iter().zip(m.as_slice()) {
        assert_eq!(*a, *b as f32 as f64);
    }
}

#[test]
fn non_finite_entries_are_rejected_on_write() {
    let dir = tempfile::tempdir().unwrap();
    let m = Matrix::new(1, 2, vec![1.0, f64::INFINITY]);
    // Matrix itself may refuse non-finite data; either way nothing is written.
    if let Ok(m) = m {
        let err = write_matrix(dir.path().join("x.mvls"), &m, Dtype::F64).unwrap_err();
        assert!(matches!(err, IoError::Validation(_)));
    }
}

#[test]
fn read_errors_carry_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.mvls");
    std::fs::write(&path, b"MVLS").unwrap();
    let msg = read_matrix(&path).unwrap_err().to_string();
    assert!(msg.contains("bad.mvls"), "{msg}");
}

fn matrix_strategy() -> impl Strategy<Value = Matrix> {
    (1usize..6, 1usize..6).prop_flat_map(|(r, c)| {
        prop::collection::vec(
            prop::num::f64::NORMAL | prop::num::f64::ZERO | prop::num::f64::SUBNORMAL,
            r * c,
        )
        .prop_map(move |data| Matrix::new(r, c, data).unwrap())
    })
}

proptest! {
    #[test]
    fn float64_round_trip_is_exact(m in matrix_strategy()) {
        let back = decode(&encode(&m, Dtype::F64).unwrap()).unwrap();
        prop_assert_eq!(back.shape(), m.shape());
        for (a, b) in back.as_slice().iter().zip(m.as_slice()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn every_truncation_is_rejected(m in matrix_strategy(), f32_storage in any::<bool>()) {
        let dtype = if f32_storage { Dtype::F32 } else { Dtype::F64 };
        let bytes = match encode(&m, dtype) {
            Ok(b) => b,
            // values outside the f32 range
            Err(IoError::Validation(_)) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        for len in 0..bytes.len() {
            prop_assert!(matches!(decode(&bytes[..len]), Err(IoError::Format(_))));
        }
    }
}
