use std::collections::HashSet;

use super::DataError;

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnKind {
    Numeric,
    /// Categorical column; values are stored as indices into `levels`.
    Categorical { levels: Vec<String> },
}

impl ColumnKind {
    pub fn categorical<S: Into<String>>(levels: impl IntoIterator<Item = S>) -> Self {
        ColumnKind::Categorical { levels: levels.into_iter().map(Into::into).collect() }
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self, ColumnKind::Categorical { .. })
    }

    /// Domain size of a categorical column, `None` for numeric columns.
    pub fn domain_size(&self) -> Option<usize> {
        match self {
            ColumnKind::Numeric => None,
            ColumnKind::Categorical { levels } => Some(levels.len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

impl Column {
    pub fn numeric(name: impl Into<String>) -> Self {
        Column { name: name.into(), kind: ColumnKind::Numeric }
    }

    pub fn categorical<S: Into<String>>(name: impl Into<String>, levels: impl IntoIterator<Item = S>) -> Self {
        Column { name: name.into(), kind: ColumnKind::categorical(levels) }
    }
}

/// Ordered column list plus the roles of the sensitive attribute (A) and the
/// target (Y). Every other column is a plain feature (X).
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeSchema {
    columns: Vec<Column>,
    sensitive: Option<String>,
    target: String,
}

impl AttributeSchema {
    pub fn new(columns: Vec<Column>, sensitive: Option<String>, target: impl Into<String>) -> Result<Self, DataError> {
        let target = target.into();
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(DataError::Schema(format!("duplicate column name `{}`", c.name)));
            }
            if let ColumnKind::Categorical { levels } = &c.kind {
                if levels.len() < 2 {
                    return Err(DataError::Schema(format!("categorical column `{}` needs at least 2 levels", c.name)));
                }
                let distinct: HashSet<&String> = levels.iter().collect();
                if distinct.len() != levels.len() {
                    return Err(DataError::Schema(format!("categorical column `{}` has repeated levels", c.name)));
                }
            }
        }
        if !seen.contains(target.as_str()) {
            return Err(DataError::UnknownColumn(target));
        }
        if let Some(a) = &sensitive {
            if !seen.contains(a.as_str()) {
                return Err(DataError::UnknownColumn(a.clone()));
            }
            if *a == target {
                return Err(DataError::Schema("sensitive attribute and target must differ".into()));
            }
        }
        Ok(AttributeSchema { columns, sensitive, target })
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn sensitive(&self) -> Option<&str> {
        self.sensitive.as_deref()
    }

    pub fn target(&self) -> &str {
        &self.target
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn target_index(&self) -> usize {
        self.index_of(&self.target).expect("validated at construction")
    }

    pub fn sensitive_index(&self) -> Option<usize> {
        self.sensitive.as_deref().and_then(|a| self.index_of(a))
    }

    /// Number of target classes (the target is categorical).
    pub fn n_classes(&self) -> Option<usize> {
        self.columns[self.target_index()].kind.domain_size()
    }

    /// Names of the plain feature columns (neither sensitive nor target).
    pub fn feature_names(&self) -> Vec<&str> {
        self.columns
            .iter()
            .map(|c| c.name.as_str())
            .filter(|n| *n != self.target && Some(*n) != self.sensitive.as_deref())
            .collect()
    }

    /// Schema with `name` removed. Clears the sensitive marker if it pointed at `name`.
    pub(crate) fn without(&self, name: &str) -> Result<AttributeSchema, DataError> {
        if self.index_of(name).is_none() {
            return Err(DataError::UnknownColumn(name.to_string()));
        }
        if name == self.target {
            return Err(DataError::Schema("cannot drop the target column".into()));
        }
        let columns = self.columns.iter().filter(|c| c.name != name).cloned().collect();
        let sensitive = self.sensitive.clone().filter(|a| a != name);
        AttributeSchema::new(columns, sensitive, self.target.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_invalid_schemas() {
        let cols = || vec![Column::numeric("a"), Column::categorical("y", ["0", "1"])];
        assert!(AttributeSchema::new(cols(), Some("y".into()), "y").is_err());
        assert!(AttributeSchema::new(cols(), None, "missing").is_err());
        let dup = vec![Column::numeric("a"), Column::numeric("a"), Column::categorical("y", ["0", "1"])];
        assert!(AttributeSchema::new(dup, None, "y").is_err());
        let tiny = vec![Column::categorical("a", ["only"]), Column::categorical("y", ["0", "1"])];
        assert!(AttributeSchema::new(tiny, None, "y").is_err());
        let ok = AttributeSchema::new(cols(), Some("a".into()), "y").unwrap();
        assert_eq!(ok.n_classes(), Some(2));
        assert!(ok.feature_names().is_empty());
    }
}
