use std::path::{Path, PathBuf};

use roxmltree::{Document, Node, NodeType, ParsingOptions};

use super::*;
use crate::grapher::parse_graph_script;
use crate::rrd::Cf;
use crate::snmp::parse_oid;

const MONITOR_ATTRS: &[&str] = &[
    "pmc-num-connections",
    "pmc-logfile",
    "pmc-verbosity",
    "pmc-rrd-dir",
    "pmc-xslt-dir",
    "http-html-dir",
    "http-port",
    "http-logfile",
    "http-filter",
    "http-filter-extensions",
];
const HOST_ATTRS: &[&str] = &["name", "ip", "polldelay", "tag", "snmpversion"];
const MIB_ATTRS: &[&str] = &["id", "name", "type", "community", "min", "max"];
const RRA_ATTRS: &[&str] = &["cf", "xff", "granularity", "expire"];
const GRAPH_ATTRS: &[&str] = &["id", "width", "height", "seconds", "title"];

struct Ctx<'a, 'i> {
    doc: &'a Document<'i>,
    base: Option<&'a Path>,
    errors: Vec<ConfigError>,
}

impl<'a, 'i> Ctx<'a, 'i> {
    fn line(&self, node: Node) -> u32 {
        self.doc.text_pos_at(node.range().start).row
    }

    fn attr_line(&self, node: Node, name: &str) -> u32 {
        node.attributes()
            .find(|a| a.name() == name && a.namespace().is_none())
            .map_or_else(
                || self.line(node),
                |a| self.doc.text_pos_at(a.range().start).row,
            )
    }

    fn schema(&mut self, node: Node, message: impl Into<String>) {
        let e = ConfigError::SchemaViolation {
            line: self.line(node),
            element: node.tag_name().name().to_string(),
            message: message.into(),
        };
        self.errors.push(e);
    }

    fn bad(&mut self, node: Node, attribute: &str, message: impl Into<String>) {
        let e = ConfigError::BadValue {
            line: self.attr_line(node, attribute),
            element: node.tag_name().name().to_string(),
            attribute: attribute.to_string(),
            message: message.into(),
        };
        self.errors.push(e);
    }

    fn duplicate(&mut self, node: Node, id: &str) {
        let e = ConfigError::DuplicateId {
            line: self.line(node),
            element: node.tag_name().name().to_string(),
            id: id.to_string(),
        };
        self.errors.push(e);
    }

    /// Reports undeclared attributes.
    fn check_attrs(&mut self, node: Node, allowed: &[&str]) {
        for a in node.attributes() {
            if a.namespace().is_some() || !allowed.contains(&a.name()) {
                let name = a.name().to_string();
                self.schema(node, format!("undeclared attribute `{name}`"));
            }
        }
    }

    fn required<'n, 'x>(&mut self, node: Node<'n, 'x>, name: &str) -> Option<&'n str> {
        let v = node.attribute(name);
        if v.is_none() {
            self.schema(node, format!("missing required attribute `{name}`"));
        }
        v
    }

    /// Element children; non-blank text is a violation for element-only
    /// content.
    fn element_children<'n, 'x>(&mut self, node: Node<'n, 'x>) -> Vec<Node<'n, 'x>> {
        let mut out = Vec::new();
        for c in node.children() {
            match c.node_type() {
                NodeType::Element => out.push(c),
                NodeType::Text if !c.text().unwrap_or("").trim().is_empty() => {
                    self.schema(node, "character data not allowed here");
                }
                _ => {}
            }
        }
        out
    }

    /// Text of a `(#PCDATA)*` element.
    fn pcdata(&mut self, node: Node) -> String {
        let mut s = String::new();
        for c in node.children() {
            match c.node_type() {
                NodeType::Text => s.push_str(c.text().unwrap_or("")),
                NodeType::Element => {
                    let name = c.tag_name().name().to_string();
                    self.schema(
                        node,
                        format!("element <{name}> not allowed in text content"),
                    );
                }
                _ => {}
            }
        }
        s
    }

    fn empty_element(&mut self, node: Node) {
        if node
            .children()
            .any(|c| c.is_element() || (c.is_text() && !c.text().unwrap_or("").is_empty()))
        {
            self.schema(node, "element must be empty");
        }
    }

    fn dir(&self, value: Option<&str>) -> PathBuf {
        let p = PathBuf::from(value.unwrap_or("."));
        match self.base {
            Some(base) if p.is_relative() => {
                if p == Path::new(".") {
                    base.to_path_buf()
                } else {
                    base.join(p)
                }
            }
            _ => p,
        }
    }

    fn uint<T: std::str::FromStr + PartialOrd + Copy + std::fmt::Display>(
        &mut self,
        node: Node,
        attr: &str,
        default: T,
        min: T,
        max: T,
    ) -> T {
        let Some(text) = node.attribute(attr) else {
            return default;
        };
        match text.trim().parse::<T>() {
            Ok(v) if v >= min && v <= max => v,
            Ok(_) => {
                self.bad(node, attr, format!("`{text}` outside {min}..={max}"));
                default
            }
            Err(_) => {
                self.bad(node, attr, format!("`{text}` is not an integer"));
                default
            }
        }
    }

    fn real(&mut self, node: Node, attr: &str) -> Option<f64> {
        let text = node.attribute(attr)?;
        match text.trim().parse::<f64>() {
            Ok(v) if v.is_finite() => Some(v),
            _ => {
                self.bad(node, attr, format!("`{text}` is not a number"));
                None
            }
        }
    }
}

fn is_nmtoken(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_alphanumeric() || matches!(c, '.' | '-' | '_' | ':' | '\u{B7}'))
}

/// Host names and graph ids appear as URI path segments.
fn path_segment_problem(s: &str) -> Option<&'static str> {
    if s.is_empty() {
        Some("must not be empty")
    } else if s == "." || s == ".." {
        Some("must not be `.` or `..`")
    } else if s
        .chars()
        .any(|c| c.is_whitespace() || c.is_control() || matches!(c, '/' | '\\' | '?' | '#' | '%'))
    {
        Some("must not contain whitespace, `/`, `\\`, `?`, `#` or `%`")
    } else {
        None
    }
}

/// Checks `children` against a sequence of `(name, optional)` slots, each
/// matching at most one element.
fn check_sequence(ctx: &mut Ctx, parent: Node, children: &[Node], pattern: &[(&str, bool)]) {
    let mut p = 0;
    for c in children {
        let name = c.tag_name().name();
        let found = pattern[p..].iter().position(|(n, _)| *n == name);
        match found {
            Some(off) => {
                for (skipped, optional) in &pattern[p..p + off] {
                    if !optional {
                        ctx.schema(parent, format!("missing <{skipped}> before <{name}>"));
                    }
                }
                p += off + 1;
            }
            None => {
                let message = if pattern.iter().any(|(n, _)| *n == name) {
                    format!("<{name}> repeated or out of order")
                } else {
                    format!("unexpected element <{name}>")
                };
                ctx.schema(*c, message);
            }
        }
    }
    for (name, optional) in &pattern[p..] {
        if !optional {
            ctx.schema(parent, format!("missing <{name}>"));
        }
    }
}

fn parse_mib(ctx: &mut Ctx, node: Node) -> Option<MibSpec> {
    ctx.check_attrs(node, MIB_ATTRS);
    ctx.empty_element(node);
    let id = ctx.required(node, "id");
    let name = ctx.required(node, "name");
    let before = ctx.errors.len();
    if let Some(id) = id {
        if !is_nmtoken(id) {
            ctx.bad(node, "id", format!("`{id}` is not a name token"));
        }
    }
    let kind = match node.attribute("type") {
        None => VarKind::Gauge,
        Some(t) => t.parse().unwrap_or_else(|_| {
            ctx.schema(
                node,
                format!("type `{t}` is not one of GAUGE, DERIVE, COUNTER"),
            );
            VarKind::Gauge
        }),
    };
    let community = node
        .attribute("community")
        .unwrap_or(DEFAULT_COMMUNITY)
        .to_string();
    if !is_nmtoken(&community) {
        ctx.bad(
            node,
            "community",
            format!("`{community}` is not a name token"),
        );
    }
    let min = ctx.real(node, "min");
    let max = ctx.real(node, "max");
    if let (Some(lo), Some(hi)) = (min, max) {
        if lo > hi {
            ctx.bad(node, "min", format!("min {lo} exceeds max {hi}"));
        }
    }
    let oid = name.and_then(|n| match parse_oid(n) {
        Ok(oid) => Some(oid),
        Err(e) => {
            ctx.bad(node, "name", e.to_string());
            None
        }
    });
    if ctx.errors.len() != before {
        return None;
    }
    Some(MibSpec {
        id: id?.to_string(),
        name: name?.to_string(),
        oid: oid?,
        kind,
        community,
        min,
        max,
    })
}

fn parse_rra(ctx: &mut Ctx, node: Node, polldelay: Option<u64>) -> Option<RraSpec> {
    ctx.check_attrs(node, RRA_ATTRS);
    ctx.empty_element(node);
    let before = ctx.errors.len();
    let cf = match node.attribute("cf") {
        None => Cf::Average,
        Some(t) => t.parse().unwrap_or_else(|_| {
            ctx.schema(
                node,
                format!("cf `{t}` is not one of AVERAGE, MIN, MAX, LAST"),
            );
            Cf::Average
        }),
    };
    let xff = match ctx.real(node, "xff") {
        Some(x) if !(0.0..=1.0).contains(&x) => {
            ctx.bad(node, "xff", format!("{x} outside [0,1]"));
            DEFAULT_XFF
        }
        Some(x) => x,
        None => DEFAULT_XFF,
    };
    let granularity = ctx
        .required(node, "granularity")
        .map(|_| ctx.uint(node, "granularity", 0u64, 1, u32::MAX as u64));
    let expire = ctx
        .required(node, "expire")
        .map(|_| ctx.uint(node, "expire", 0u64, 1, u64::MAX / 2));
    if ctx.errors.len() != before {
        return None;
    }
    let (granularity, expire) = (granularity?, expire?);
    if let Some(step) = polldelay {
        if granularity % step != 0 {
            ctx.schema(
                node,
                format!("granularity {granularity} is not a multiple of the host polldelay {step}"),
            );
            return None;
        }
    }
    if expire < granularity {
        ctx.bad(
            node,
            "expire",
            format!("expire {expire} shorter than granularity {granularity}"),
        );
        return None;
    }
    Some(RraSpec {
        cf,
        xff,
        granularity,
        expire,
    })
}

fn parse_graph(ctx: &mut Ctx, node: Node, mib_ids: &[&str]) -> Option<GraphSpec> {
    ctx.check_attrs(node, GRAPH_ATTRS);
    let before = ctx.errors.len();
    let id = ctx.required(node, "id");
    let title = ctx.required(node, "title");
    if let Some(id) = id {
        if let Some(problem) = path_segment_problem(id) {
            ctx.bad(node, "id", format!("graph id {problem}"));
        } else if ImageFormat::from_graph_id(id).is_none() {
            ctx.bad(node, "id", format!("`{id}` needs a .png or .svg extension"));
        }
    }
    use crate::grapher::{MAX_DIMENSION, MIN_DIMENSION};
    let width = ctx.uint(
        node,
        "width",
        DEFAULT_GRAPH_WIDTH,
        MIN_DIMENSION,
        MAX_DIMENSION,
    );
    let height = ctx.uint(
        node,
        "height",
        DEFAULT_GRAPH_HEIGHT,
        MIN_DIMENSION,
        MAX_DIMENSION,
    );
    let seconds_text = node.attribute("seconds").unwrap_or(DEFAULT_GRAPH_START);
    let seconds = seconds_text.parse::<AtTime>().unwrap_or_else(|e| {
        ctx.bad(node, "seconds", e.to_string());
        AtTime::Relative(0)
    });
    let children = ctx.element_children(node);
    let mut body = Vec::new();
    for c in &children {
        if c.tag_name().name() == "line" {
            ctx.check_attrs(*c, &[]);
            body.push(ctx.pcdata(*c));
        } else {
            let name = c.tag_name().name().to_string();
            ctx.schema(*c, format!("unexpected element <{name}>"));
        }
    }
    if body.is_empty() {
        ctx.schema(node, "at least one <line> required");
        return None;
    }
    let program = match parse_graph_script(&body).and_then(|p| {
        p.check_mibs(|m| mib_ids.contains(&m))?;
        Ok(p)
    }) {
        Ok(p) => Some(p),
        Err(e) => {
            let e = ConfigError::BadValue {
                line: ctx.line(node),
                element: "rrdgraph".into(),
                attribute: "line".into(),
                message: e.to_string(),
            };
            ctx.errors.push(e);
            None
        }
    };
    if ctx.errors.len() != before {
        return None;
    }
    Some(GraphSpec {
        id: id?.to_string(),
        width,
        height,
        seconds,
        title: title?.to_string(),
        body,
        program: program?,
    })
}

fn parse_host(ctx: &mut Ctx, node: Node) -> Option<HostConfig> {
    ctx.check_attrs(node, HOST_ATTRS);
    let before = ctx.errors.len();
    let name = ctx.required(node, "name");
    if let Some(problem) = name.and_then(path_segment_problem) {
        ctx.bad(node, "name", format!("host name {problem}"));
    }
    let polldelay =
        ctx.required(node, "polldelay")
            .and_then(|text| match text.trim().parse::<u64>() {
                Ok(v) if (1..=u32::MAX as u64).contains(&v) => Some(v),
                _ => {
                    ctx.bad(
                        node,
                        "polldelay",
                        format!("`{text}` is not a positive integer"),
                    );
                    None
                }
            });
    let snmp_version = match node.attribute("snmpversion") {
        None | Some("2c") => Version::V2c,
        Some("1") => Version::V1,
        Some(other) => {
            ctx.schema(node, format!("snmpversion `{other}` is not one of 1, 2c"));
            Version::V2c
        }
    };
    let tags: Vec<String> = node
        .attribute("tag")
        .unwrap_or("")
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect();
    if let Some(bad) = tags.iter().find(|t| !is_nmtoken(t)) {
        let msg = format!("`{bad}` is not a name token");
        ctx.bad(node, "tag", msg);
    }

    let children = ctx.element_children(node);
    check_sequence(
        ctx,
        node,
        &children,
        &[
            ("description", true),
            ("mailto", true),
            ("miblist", false),
            ("archives", false),
            ("graphs", false),
        ],
    );
    let mut description = None;
    let mut mailto = None;
    let mut mibs: Vec<MibSpec> = Vec::new();
    let mut rras = Vec::new();
    let mut graphs: Vec<GraphSpec> = Vec::new();
    let mut mib_ids: Vec<String> = Vec::new();
    let mut graph_nodes = Vec::new();
    for c in &children {
        match c.tag_name().name() {
            "description" => {
                ctx.check_attrs(*c, &[]);
                description = Some(ctx.pcdata(*c));
            }
            "mailto" => {
                ctx.check_attrs(*c, &[]);
                mailto = Some(ctx.pcdata(*c));
            }
            "miblist" => {
                ctx.check_attrs(*c, &[]);
                for m in ctx.element_children(*c) {
                    if m.tag_name().name() != "mib" {
                        let n = m.tag_name().name().to_string();
                        ctx.schema(m, format!("unexpected element <{n}>"));
                        continue;
                    }
                    if let Some(id) = m.attribute("id") {
                        if mib_ids.iter().any(|x| x == id) {
                            ctx.duplicate(m, id);
                        } else {
                            mib_ids.push(id.to_string());
                        }
                    }
                    if let Some(spec) = parse_mib(ctx, m) {
                        mibs.push(spec);
                    }
                }
            }
            "archives" => {
                ctx.check_attrs(*c, &[]);
                for r in ctx.element_children(*c) {
                    if r.tag_name().name() != "rra" {
                        let n = r.tag_name().name().to_string();
                        ctx.schema(r, format!("unexpected element <{n}>"));
                        continue;
                    }
                    if let Some(spec) = parse_rra(ctx, r, polldelay) {
                        rras.push(spec);
                    }
                }
            }
            "graphs" => {
                ctx.check_attrs(*c, &[]);
                graph_nodes.extend(ctx.element_children(*c));
            }
            _ => {}
        }
    }
    let ids: Vec<&str> = mib_ids.iter().map(String::as_str).collect();
    let mut graph_ids: Vec<&str> = Vec::new();
    for g in graph_nodes {
        if g.tag_name().name() != "rrdgraph" {
            let n = g.tag_name().name().to_string();
            ctx.schema(g, format!("unexpected element <{n}>"));
            continue;
        }
        if let Some(id) = g.attribute("id") {
            if graph_ids.contains(&id) {
                ctx.duplicate(g, id);
            } else {
                graph_ids.push(id);
            }
        }
        if let Some(spec) = parse_graph(ctx, g, &ids) {
            graphs.push(spec);
        }
    }

    if ctx.errors.len() != before {
        return None;
    }
    let name = name?.to_string();
    let polldelay = polldelay?;
    let values: u64 =
        rras.iter().map(|r: &RraSpec| r.rows() as u64).sum::<u64>() * mibs.len() as u64;
    if values > MAX_ARCHIVE_VALUES {
        ctx.bad(
            node,
            "name",
            format!("archives would hold {values} values, more than {MAX_ARCHIVE_VALUES}"),
        );
        return None;
    }
    Some(HostConfig {
        ip: node.attribute("ip").unwrap_or(&name).to_string(),
        name,
        polldelay,
        tags,
        snmp_version,
        description,
        mailto,
        mibs,
        rras,
        graphs,
    })
}

fn parse_monitor(ctx: &mut Ctx, node: Node) -> Option<MonitorConfig> {
    if node.tag_name().name() != "monitor" || node.tag_name().namespace().is_some() {
        let n = node.tag_name().name().to_string();
        ctx.schema(node, format!("root element must be <monitor>, found <{n}>"));
        return None;
    }
    ctx.check_attrs(node, MONITOR_ATTRS);
    let num_connections = ctx.uint(
        node,
        "pmc-num-connections",
        DEFAULT_NUM_CONNECTIONS,
        1,
        65_536,
    );
    let verbosity = ctx.uint(node, "pmc-verbosity", DEFAULT_VERBOSITY, 0, 3);
    let http_port = ctx.uint(node, "http-port", DEFAULT_HTTP_PORT, 1, 65_535);
    let file = |attr: &str| node.attribute(attr).filter(|s| !s.is_empty());
    let config = MonitorConfig {
        num_connections,
        pmc_logfile: file("pmc-logfile").map(|p| ctx.dir(Some(p))),
        verbosity,
        rrd_dir: ctx.dir(file("pmc-rrd-dir")),
        xslt_dir: ctx.dir(file("pmc-xslt-dir")),
        html_dir: ctx.dir(file("http-html-dir")),
        http_port,
        http_logfile: file("http-logfile").map(|p| ctx.dir(Some(p))),
        http_filter: file("http-filter").map(str::to_string),
        http_filter_extensions: node
            .attribute("http-filter-extensions")
            .unwrap_or("")
            .split_whitespace()
            .map(|e| e.trim_start_matches('.').to_string())
            .filter(|e| !e.is_empty())
            .collect(),
        hosts: Vec::new(),
    };
    let mut hosts = Vec::new();
    let mut names: Vec<&str> = Vec::new();
    let children = ctx.element_children(node);
    if children.is_empty() {
        ctx.schema(node, "at least one <host> required");
    }
    for c in children {
        if c.tag_name().name() != "host" {
            let n = c.tag_name().name().to_string();
            ctx.schema(c, format!("unexpected element <{n}>"));
            continue;
        }
        if let Some(name) = c.attribute("name") {
            if names.contains(&name) {
                ctx.duplicate(c, name);
            } else {
                names.push(name);
            }
        }
        if let Some(h) = parse_host(ctx, c) {
            hosts.push(h);
        }
    }
    Some(MonitorConfig { hosts, ..config })
}

/// Parses a configuration document. Relative paths are kept as written.
pub fn parse_config(xml_text: &str) -> Result<MonitorConfig, ConfigErrors> {
    parse_config_with_base(xml_text, None)
}

/// Parses a configuration document, resolving relative paths against
/// `base` when given. Either every default is filled in, or the full
/// list of problems is returned.
pub fn parse_config_with_base(
    xml_text: &str,
    base: Option<&Path>,
) -> Result<MonitorConfig, ConfigErrors> {
    let opts = ParsingOptions {
        allow_dtd: true,
        ..ParsingOptions::default()
    };
    let doc = Document::parse_with_options(xml_text, opts).map_err(|e| {
        ConfigErrors(vec![ConfigError::WellFormedness {
            line: e.pos().row,
            message: e.to_string(),
        }])
    })?;
    let mut ctx = Ctx {
        doc: &doc,
        base,
        errors: Vec::new(),
    };
    let config = parse_monitor(&mut ctx, doc.root_element());
    match config {
        Some(c) if ctx.errors.is_empty() => Ok(c),
        _ => Err(ConfigErrors(ctx.errors)),
    }
}
