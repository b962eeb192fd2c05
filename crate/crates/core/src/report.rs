//! Result tables rendered two ways: aligned plain text (column maxima
//! bolded as *value*) and RFC 4180 CSV with the same numeric content.

/// One table cell. `Value` and `Pair` hold accuracy percentages; `Missing`
/// renders as "---" and marks a structurally impossible run.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Value(f64),
    /// Two related results in one cell, e.g. (frozen, fine-tuned).
    Pair(f64, f64),
    Missing,
    Text(String),
}

impl Cell {
    fn format(&self) -> String {
        match self {
            Cell::Value(v) => format!("{v:.2}"),
            Cell::Pair(a, b) => format!("{a:.2}, {b:.2}"),
            Cell::Missing => "---".to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReportTable {
    pub title: String,
    /// Header of the row-label column.
    pub corner: String,
    pub col_labels: Vec<String>,
    pub row_labels: Vec<String>,
    /// Row-major, `row_labels.len()` × `col_labels.len()`.
    pub cells: Vec<Vec<Cell>>,
    /// Bold the maximum `Value` in each column (text rendering only).
    pub bold_column_max: bool,
    pub notes: Vec<String>,
}

impl ReportTable {
    pub fn new(title: impl Into<String>, corner: impl Into<String>, col_labels: Vec<String>) -> Self {
        ReportTable {
            title: title.into(),
            corner: corner.into(),
            col_labels,
            row_labels: Vec::new(),
            cells: Vec::new(),
            bold_column_max: false,
            notes: Vec::new(),
        }
    }

    pub fn push_row(&mut self, label: impl Into<String>, cells: Vec<Cell>) {
        debug_assert_eq!(cells.len(), self.col_labels.len());
        self.row_labels.push(label.into());
        self.cells.push(cells);
    }

    /// Row indexes holding the maximum `Value` in a column; several on ties.
    fn column_max_rows(&self, col: usize) -> Vec<usize> {
        let mut best: Option<f64> = None;
        for row in &self.cells {
            if let Cell::Value(v) = row[col] {
                best = Some(best.map_or(v, |b: f64| b.max(v)));
            }
        }
        let Some(best) = best else { return Vec::new() };
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, row)| matches!(row[col], Cell::Value(v) if v == best))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn render_text(&self) -> String {
        let cols = self.col_labels.len();
        let bold: Vec<Vec<usize>> = if self.bold_column_max {
            (0..cols).map(|c| self.column_max_rows(c)).collect()
        } else {
            vec![Vec::new(); cols]
        };
        let mut tie_columns = Vec::new();
        for (c, rows) in bold.iter().enumerate() {
            if rows.len() > 1 {
                tie_columns.push(self.col_labels[c].clone());
            }
        }

        let formatted: Vec<Vec<String>> = self
            .cells
            .iter()
            .enumerate()
            .map(|(r, row)| {
                row.iter()
                    .enumerate()
                    .map(|(c, cell)| {
                        let s = cell.format();
                        if bold[c].contains(&r) {
                            format!("*{s}*")
                        } else {
                            s
                        }
                    })
                    .collect()
            })
            .collect();

        let mut widths: Vec<usize> = self.col_labels.iter().map(|l| l.chars().count()).collect();
        for row in &formatted {
            for (c, s) in row.iter().enumerate() {
                widths[c] = widths[c].max(s.chars().count());
            }
        }
        let label_width = self
            .row_labels
            .iter()
            .map(|l| l.chars().count())
            .chain([self.corner.chars().count()])
            .max()
            .unwrap_or(0);

        let pad = |s: &str, w: usize| {
            let n = s.chars().count();
            format!("{}{s}", " ".repeat(w.saturating_sub(n)))
        };
        let pad_left = |s: &str, w: usize| {
            let n = s.chars().count();
            format!("{s}{}", " ".repeat(w.saturating_sub(n)))
        };

        let mut out = String::new();
        out.push_str(&self.title);
        out.push('\n');
        out.push_str(&pad_left(&self.corner, label_width));
        for (c, l) in self.col_labels.iter().enumerate() {
            out.push_str("  ");
            out.push_str(&pad(l, widths[c]));
        }
        out.push('\n');
        let total = label_width + widths.iter().map(|w| w + 2).sum::<usize>();
        out.push_str(&"-".repeat(total));
        out.push('\n');
        for (r, label) in self.row_labels.iter().enumerate() {
            out.push_str(&pad_left(label, label_width));
            for (c, s) in formatted[r].iter().enumerate() {
                out.push_str("  ");
                out.push_str(&pad(s, widths[c]));
            }
            out.push('\n');
        }
        for note in &self.notes {
            out.push_str("note: ");
            out.push_str(note);
            out.push('\n');
        }
        if !tie_columns.is_empty() {
            out.push_str(&format!(
                "note: tied column maxima (all bolded): {}\n",
                tie_columns.join(", ")
            ));
        }
        out
    }

    /// Header row plus data rows; numeric values formatted exactly as in
    /// the text rendering, without bold markers, title, or notes.
    pub fn render_csv(&self) -> String {
        let mut out = String::new();
        let mut header: Vec<String> = vec![self.corner.clone()];
        header.extend(self.col_labels.iter().cloned());
        out.push_str(&csv_row(&header));
        for (r, label) in self.row_labels.iter().enumerate() {
            let mut fields = vec![label.clone()];
            fields.extend(self.cells[r].iter().map(|c| c.format()));
            out.push_str(&csv_row(&fields));
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn csv_row(fields: &[String]) -> String {
    let mut row = fields.iter().map(|f| csv_field(f)).collect::<Vec<_>>().join(",");
    row.push('\n');
    row
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ReportTable {
        let mut t = ReportTable::new("results", "setting", vec!["a↠b".into(), "c↠d".into()]);
        t.bold_column_max = true;
        t.push_row("plan1", vec![Cell::Value(81.2849), Cell::Missing]);
        t.push_row("plan2", vec![Cell::Value(84.131), Cell::Value(70.0)]);
        t.push_row("plan3", vec![Cell::Value(79.5), Cell::Value(70.0)]);
        t
    }

    #[test]
    fn text_bolds_column_maxima_and_marks_missing() {
        let text = sample().render_text();
        assert!(text.contains("*84.13*"), "\n{text}");
        assert!(text.contains("81.28"));
        assert!(!text.contains("*81.28*"));
        assert!(text.contains("---"));
        // Both 70.00 cells tie for the second column's maximum.
        assert_eq!(text.matches("*70.00*").count(), 2);
        assert!(text.contains("tied column maxima"));
    }

    #[test]
    fn csv_has_same_numbers_no_markup() {
        let t = sample();
        let csv = t.render_csv();
        assert!(csv.starts_with("setting,a↠b,c↠d\n"));
        assert!(csv.contains("plan2,84.13,70.00\n"));
        assert!(csv.contains("plan1,81.28,---\n"));
        assert!(!csv.contains('*'));

        // Every number in the CSV appears in the text rendering too.
        let text = t.render_text();
        for field in ["81.28", "84.13", "79.50", "70.00", "---"] {
            assert!(text.contains(field) && csv.contains(field), "{field} diverges");
        }
    }

    #[test]
    fn pair_cells_are_quoted_in_csv() {
        let mut t = ReportTable::new("grid", "src", vec!["tgt".into()]);
        t.push_row("Tanh", vec![Cell::Pair(81.283, 84.129)]);
        let csv = t.render_csv();
        assert!(csv.contains("\"81.28, 84.13\""), "{csv}");
        let text = t.render_text();
        assert!(text.contains("81.28, 84.13"));
    }

    #[test]
    fn unbolded_tables_render_plain() {
        let mut t = sample();
        t.bold_column_max = false;
        let text = t.render_text();
        assert!(!text.contains('*'));
    }
}
