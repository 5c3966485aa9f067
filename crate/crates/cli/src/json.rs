//! Reading JSON values while tracking the field path for error messages.

use hmprate::Matrix;
use serde_json::Value;

use crate::error::{CliError, Result};

pub(crate) struct Field<'a> {
    pub value: &'a Value,
    pub path: String,
}

impl<'a> Field<'a> {
    pub fn root(value: &'a Value) -> Self {
        Field { value, path: String::new() }
    }

    fn child_path(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.path)
        }
    }

    pub fn get(&self, key: &str) -> Option<Field<'a>> {
        self.value.get(key).filter(|v| !v.is_null()).map(|value| Field { value, path: self.child_path(key) })
    }

    pub fn require(&self, key: &str) -> Result<Field<'a>> {
        self.get(key).ok_or_else(|| CliError::model(self.child_path(key), "missing field"))
    }

    pub fn items(&self) -> Result<Vec<Field<'a>>> {
        let arr = self.value.as_array().ok_or_else(|| self.error("expected an array"))?;
        Ok(arr.iter().enumerate().map(|(k, value)| Field { value, path: format!("{}[{k}]", self.path) }).collect())
    }

    pub fn entries(&self) -> Result<Vec<(&'a str, Field<'a>)>> {
        let obj = self.value.as_object().ok_or_else(|| self.error("expected an object"))?;
        Ok(obj.iter().map(|(k, value)| (k.as_str(), Field { value, path: format!("{}[{k}]", self.path) })).collect())
    }

    pub fn error(&self, message: impl Into<String>) -> CliError {
        CliError::model(self.path.clone(), message)
    }

    pub fn f64(&self) -> Result<f64> {
        self.value.as_f64().filter(|v| v.is_finite()).ok_or_else(|| self.error("expected a finite number"))
    }

    pub fn usize(&self) -> Result<usize> {
        self.value.as_u64().map(|v| v as usize).ok_or_else(|| self.error("expected a non-negative integer"))
    }

    pub fn str(&self) -> Result<&'a str> {
        self.value.as_str().ok_or_else(|| self.error("expected a string"))
    }

    pub fn vec_f64(&self) -> Result<Vec<f64>> {
        self.items()?.iter().map(Field::f64).collect()
    }

    pub fn interval(&self) -> Result<(f64, f64)> {
        let v = self.vec_f64()?;
        match v[..] {
            [lo, hi] if lo <= hi => Ok((lo, hi)),
            _ => Err(self.error("expected [lo, hi] with lo <= hi")),
        }
    }

    /// A `rows × cols` matrix given as nested rows or as one flat row-major array.
    pub fn matrix(&self, rows: usize, cols: usize) -> Result<Matrix> {
        let items = self.items()?;
        if items.iter().all(|f| f.value.is_array()) {
            if items.len() != rows {
                return Err(self.error(format!("expected {rows} rows, got {}", items.len())));
            }
            let mut data = Vec::with_capacity(rows * cols);
            for row in &items {
                let r = row.vec_f64()?;
                if r.len() != cols {
                    return Err(row.error(format!("expected {cols} entries, got {}", r.len())));
                }
                data.extend(r);
            }
            return Ok(Matrix::from_vec(rows, cols, data));
        }
        let data = self.vec_f64()?;
        if data.len() != rows * cols {
            return Err(self.error(format!("expected {} entries, got {}", rows * cols, data.len())));
        }
        Ok(Matrix::from_vec(rows, cols, data))
    }

    /// Either a count `n` (names `"0" .. "n-1"`) or a list of distinct names.
    pub fn names(&self) -> Result<Vec<String>> {
        if let Some(n) = self.value.as_u64() {
            if n == 0 {
                return Err(self.error("must be positive"));
            }
            return Ok((0..n).map(|k| k.to_string()).collect());
        }
        let mut names: Vec<String> = Vec::new();
        for item in self.items()? {
            let name = match item.value {
                Value::String(s) => s.clone(),
                Value::Number(n) => n.to_string(),
                _ => return Err(item.error("expected a name")),
            };
            if names.contains(&name) {
                return Err(item.error(format!("duplicate name `{name}`")));
            }
            names.push(name);
        }
        if names.is_empty() {
            return Err(self.error("must not be empty"));
        }
        Ok(names)
    }
}
