//! Plain-array JSON encodings for ndarray containers.

pub mod array1 {
    use ndarray::Array1;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<T: Serialize, S: Serializer>(a: &Array1<T>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(a.iter())
    }

    pub fn deserialize<'de, T: Deserialize<'de>, D: Deserializer<'de>>(d: D) -> Result<Array1<T>, D::Error> {
        Vec::<T>::deserialize(d).map(Array1::from)
    }
}

/// Row-major nested arrays.
pub mod array2 {
    use ndarray::Array2;
    use serde::{de::Error, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<T: Serialize + Clone, S: Serializer>(a: &Array2<T>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(a.rows().into_iter().map(|r| r.to_vec()))
    }

    pub fn deserialize<'de, T: Deserialize<'de> + Clone, D: Deserializer<'de>>(d: D) -> Result<Array2<T>, D::Error> {
        let rows = Vec::<Vec<T>>::deserialize(d)?;
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(D::Error::custom("ragged matrix rows"));
        }
        let nrows = rows.len();
        Array2::from_shape_vec((nrows, ncols), rows.into_iter().flatten().collect()).map_err(D::Error::custom)
    }
}
