use std::fmt;

use super::rpn::Rpn;
use super::GraphError;
use crate::rrd::Cf;

#[derive(Debug, Clone, PartialEq)]
pub enum VarSource {
    Def { mib: String, cf: Cf },
    Cdef(Rpn),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarDef {
    pub name: String,
    pub source: VarSource,
    /// 1-based line in the graph body.
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    Line {
        width: u8,
        var: usize,
        color: [u8; 3],
        legend: Option<String>,
    },
    Area {
        var: usize,
        color: [u8; 3],
        legend: Option<String>,
    },
    Comment(String),
}

/// A parsed graph body. Variables are indexed in definition order.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphProgram {
    pub vars: Vec<VarDef>,
    pub elements: Vec<Element>,
}

impl GraphProgram {
    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    /// Checks every DEF against the host's variable ids.
    pub fn check_mibs(&self, has_mib: impl Fn(&str) -> bool) -> Result<(), GraphError> {
        for v in &self.vars {
            if let VarSource::Def { mib, .. } = &v.source {
                if !has_mib(mib) {
                    return Err(GraphError::UnknownMib {
                        line: v.line,
                        id: mib.clone(),
                    });
                }
            }
        }
        Ok(())
    }
}

fn syntax(line: usize, message: impl Into<String>) -> GraphError {
    GraphError::Syntax {
        line,
        message: message.into(),
    }
}

fn valid_vname(name: &str) -> bool {
    !name.is_empty()
        && name.len() <= 255
        && name
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
        && !name.bytes().all(|b| b.is_ascii_digit() || b == b'-')
}

fn parse_color(text: &str, line: usize) -> Result<[u8; 3], GraphError> {
    if text.len() != 6 || !text.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(syntax(line, format!("bad colour `#{text}`")));
    }
    let byte = |i: usize| u8::from_str_radix(&text[i..i + 2], 16).expect("hex checked");
    Ok([byte(0), byte(2), byte(4)])
}

struct Parser {
    vars: Vec<VarDef>,
    elements: Vec<Element>,
}

impl Parser {
    fn lookup(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    fn define(&mut self, name: &str, source: VarSource, line: usize) -> Result<(), GraphError> {
        if !valid_vname(name) {
            return Err(syntax(line, format!("bad variable name `{name}`")));
        }
        if self.lookup(name).is_some() {
            return Err(GraphError::DuplicateVname {
                line,
                name: name.to_string(),
            });
        }
        self.vars.push(VarDef {
            name: name.to_string(),
            source,
            line,
        });
        Ok(())
    }

    /// `<vname>#RRGGBB[:legend]`
    fn plot_args(
        &self,
        args: &str,
        line: usize,
    ) -> Result<(usize, [u8; 3], Option<String>), GraphError> {
        let (head, legend) = match args.split_once(':') {
            Some((h, l)) => (h, Some(l.to_string())),
            None => (args, None),
        };
        let (name, color) = head
            .split_once('#')
            .ok_or_else(|| syntax(line, "expected <vname>#RRGGBB"))?;
        let var = self
            .lookup(name)
            .ok_or_else(|| GraphError::UndefinedVname {
                line,
                name: name.to_string(),
            })?;
        Ok((
            var,
            parse_color(color, line)?,
            legend.filter(|l| !l.is_empty()),
        ))
    }

    fn statement(&mut self, text: &str, line: usize) -> Result<(), GraphError> {
        let (kw, rest) = text
            .split_once(':')
            .ok_or_else(|| syntax(line, format!("unrecognised instruction `{text}`")))?;
        match kw {
            "DEF" => {
                let (name, spec) = rest
                    .split_once('=')
                    .ok_or_else(|| syntax(line, "expected DEF:<vname>=<mib-id>:<CF>"))?;
                let (mib, cf) = spec
                    .rsplit_once(':')
                    .ok_or_else(|| syntax(line, "expected DEF:<vname>=<mib-id>:<CF>"))?;
                if mib.is_empty() {
                    return Err(syntax(line, "empty variable id in DEF"));
                }
                let cf: Cf = cf
                    .parse()
                    .map_err(|_| syntax(line, format!("unknown consolidation function `{cf}`")))?;
                self.define(
                    name,
                    VarSource::Def {
                        mib: mib.to_string(),
                        cf,
                    },
                    line,
                )
            }
            "CDEF" => {
                let (name, expr) = rest
                    .split_once('=')
                    .ok_or_else(|| syntax(line, "expected CDEF:<vname>=<rpn>"))?;
                let rpn = Rpn::parse(expr, line, |n| self.lookup(n))?;
                self.define(name, VarSource::Cdef(rpn), line)
            }
            "AREA" => {
                let (var, color, legend) = self.plot_args(rest, line)?;
                self.elements.push(Element::Area { var, color, legend });
                Ok(())
            }
            "COMMENT" => {
                self.elements.push(Element::Comment(rest.to_string()));
                Ok(())
            }
            _ => {
                let width = match kw {
                    "LINE1" => 1,
                    "LINE2" => 2,
                    "LINE3" => 3,
                    _ => return Err(syntax(line, format!("unsupported instruction `{kw}`"))),
                };
                let (var, color, legend) = self.plot_args(rest, line)?;
                self.elements.push(Element::Line {
                    width,
                    var,
                    color,
                    legend,
                });
                Ok(())
            }
        }
    }
}

/// Parses a graph body, one instruction per line. Blank lines are skipped;
/// line numbers in errors are 1-based positions in `lines`.
pub fn parse_graph_script<S: AsRef<str>>(lines: &[S]) -> Result<GraphProgram, GraphError> {
    let mut p = Parser {
        vars: Vec::new(),
        elements: Vec::new(),
    };
    for (i, raw) in lines.iter().enumerate() {
        let text = raw.as_ref().trim();
        if text.is_empty() {
            continue;
        }
        p.statement(text, i + 1)?;
    }
    if p.elements.is_empty() {
        return Err(syntax(lines.len().max(1), "graph draws nothing"));
    }
    Ok(GraphProgram {
        vars: p.vars,
        elements: p.elements,
    })
}

fn write_rpn(f: &mut fmt::Formatter<'_>, rpn: &Rpn, vars: &[VarDef]) -> fmt::Result {
    for (i, t) in rpn.tokens().iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        match t {
            super::Token::Num(n) => write!(f, "{n}")?,
            super::Token::Var(v) => f.write_str(&vars[*v].name)?,
            super::Token::Op(op) => write!(f, "{}", op.symbol())?,
        }
    }
    Ok(())
}

/// Canonical script text, one instruction per line.
impl fmt::Display for GraphProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.vars {
            match &v.source {
                VarSource::Def { mib, cf } => writeln!(f, "DEF:{}={}:{}", v.name, mib, cf)?,
                VarSource::Cdef(rpn) => {
                    write!(f, "CDEF:{}=", v.name)?;
                    write_rpn(f, rpn, &self.vars)?;
                    writeln!(f)?;
                }
            }
        }
        let hex = |c: &[u8; 3]| format!("{:02X}{:02X}{:02X}", c[0], c[1], c[2]);
        for e in &self.elements {
            match e {
                Element::Line {
                    width,
                    var,
                    color,
                    legend,
                } => {
                    write!(f, "LINE{}:{}#{}", width, self.vars[*var].name, hex(color))?;
                    if let Some(l) = legend {
                        write!(f, ":{l}")?;
                    }
                    writeln!(f)?;
                }
                Element::Area { var, color, legend } => {
                    write!(f, "AREA:{}#{}", self.vars[*var].name, hex(color))?;
                    if let Some(l) = legend {
                        write!(f, ":{l}")?;
                    }
                    writeln!(f)?;
                }
                Element::Comment(t) => writeln!(f, "COMMENT:{t}")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn def_and_line() {
        let p = parse_graph_script(&["DEF:f=freeMem:AVERAGE", "LINE2:f#00FF00:free"]).unwrap();
        assert_eq!(
            p.vars[0].source,
            VarSource::Def {
                mib: "freeMem".into(),
                cf: Cf::Average
            }
        );
        assert_eq!(
            p.elements,
            vec![Element::Line {
                width: 2,
                var: 0,
                color: [0, 255, 0],
                legend: Some("free".into())
            }]
        );
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_graph_script(&["DEF:f=freeMem:AVERAGE", "CDEF:x=f,+", "LINE1:x#000000"])
            .unwrap_err();
        assert!(matches!(e, GraphError::UnbalancedRpn { line: 2, .. }));
        let e = parse_graph_script(&["LINE1:g#000000"]).unwrap_err();
        assert!(matches!(e, GraphError::UndefinedVname { line: 1, .. }));
        let e = parse_graph_script(&["DEF:f=m:AVERAGE", "GPRINT:f:MAX:%lf"]).unwrap_err();
        assert!(matches!(e, GraphError::Syntax { line: 2, .. }));
        let e = parse_graph_script(&["DEF:f=m:AVG", "LINE1:f#000000"]).unwrap_err();
        assert!(matches!(e, GraphError::Syntax { line: 1, .. }));
        let e = parse_graph_script(&["DEF:f=m:MAX", "LINE4:f#000000"]).unwrap_err();
        assert!(matches!(e, GraphError::Syntax { line: 2, .. }));
        let e = parse_graph_script(&["DEF:f=m:MAX", "LINE1:f#00000G"]).unwrap_err();
        assert!(matches!(e, GraphError::Syntax { line: 2, .. }));
        let e = parse_graph_script(&["DEF:f=m:MAX", "DEF:f=n:MAX", "LINE1:f#000000"]).unwrap_err();
        assert!(matches!(e, GraphError::DuplicateVname { line: 2, .. }));
    }

    #[test]
    fn display_round_trips() {
        let src = [
            "DEF:f=freeMem:AVERAGE",
            "CDEF:mb=f,1024,/",
            "AREA:mb#FF0000:used",
            "LINE3:f#0000FF",
            "COMMENT:a: b",
        ];
        let p = parse_graph_script(&src).unwrap();
        let text = p.to_string();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines, src);
        assert_eq!(parse_graph_script(&lines).unwrap(), p);
    }

    #[test]
    fn check_mibs_reports_unknown() {
        let p = parse_graph_script(&["DEF:f=freeMem:AVERAGE", "LINE1:f#000000"]).unwrap();
        assert!(p.check_mibs(|m| m == "freeMem").is_ok());
        assert!(matches!(
            p.check_mibs(|_| false),
            Err(GraphError::UnknownMib { line: 1, .. })
        ));
    }
}
