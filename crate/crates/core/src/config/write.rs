use std::fmt::Write;
use std::path::Path;

use super::{HostConfig, MonitorConfig};
use crate::snmp::Version;
use crate::xml::{escape, escape_attr};

fn attr(out: &mut String, name: &str, value: &str) {
    let _ = write!(out, " {name}=\"{}\"", escape_attr(value));
}

fn path_attr(out: &mut String, name: &str, value: &Path) {
    attr(out, name, &value.to_string_lossy());
}

fn write_host(out: &mut String, h: &HostConfig) {
    out.push_str("  <host");
    attr(out, "name", &h.name);
    attr(out, "ip", &h.ip);
    attr(out, "polldelay", &h.polldelay.to_string());
    if !h.tags.is_empty() {
        attr(out, "tag", &h.tags.join(" "));
    }
    attr(
        out,
        "snmpversion",
        match h.snmp_version {
            Version::V1 => "1",
            Version::V2c => "2c",
        },
    );
    out.push_str(">\n");
    if let Some(d) = &h.description {
        let _ = writeln!(out, "    <description>{}</description>", escape(d));
    }
    if let Some(m) = &h.mailto {
        let _ = writeln!(out, "    <mailto>{}</mailto>", escape(m));
    }
    out.push_str("    <miblist>\n");
    for m in &h.mibs {
        out.push_str("      <mib");
        attr(out, "id", &m.id);
        attr(out, "name", &m.name);
        attr(out, "type", m.kind.as_str());
        attr(out, "community", &m.community);
        if let Some(v) = m.min {
            attr(out, "min", &v.to_string());
        }
        if let Some(v) = m.max {
            attr(out, "max", &v.to_string());
        }
        out.push_str("/>\n");
    }
    out.push_str("    </miblist>\n    <archives>\n");
    for r in &h.rras {
        out.push_str("      <rra");
        attr(out, "cf", r.cf.as_str());
        attr(out, "xff", &r.xff.to_string());
        attr(out, "granularity", &r.granularity.to_string());
        attr(out, "expire", &r.expire.to_string());
        out.push_str("/>\n");
    }
    out.push_str("    </archives>\n    <graphs>\n");
    for g in &h.graphs {
        out.push_str("      <rrdgraph");
        attr(out, "id", &g.id);
        attr(out, "width", &g.width.to_string());
        attr(out, "height", &g.height.to_string());
        attr(out, "seconds", &g.seconds.to_string());
        attr(out, "title", &g.title);
        out.push_str(">\n");
        for line in &g.body {
            let _ = writeln!(out, "        <line>{}</line>", escape(line));
        }
        out.push_str("      </rrdgraph>\n");
    }
    out.push_str("    </graphs>\n  </host>\n");
}

pub fn to_xml(c: &MonitorConfig) -> String {
    let mut out = String::from("<?xml version=\"1.0\"?>\n<monitor");
    attr(
        &mut out,
        "pmc-num-connections",
        &c.num_connections.to_string(),
    );
    if let Some(p) = &c.pmc_logfile {
        path_attr(&mut out, "pmc-logfile", p);
    }
    attr(&mut out, "pmc-verbosity", &c.verbosity.to_string());
    path_attr(&mut out, "pmc-rrd-dir", &c.rrd_dir);
    path_attr(&mut out, "pmc-xslt-dir", &c.xslt_dir);
    path_attr(&mut out, "http-html-dir", &c.html_dir);
    attr(&mut out, "http-port", &c.http_port.to_string());
    if let Some(p) = &c.http_logfile {
        path_attr(&mut out, "http-logfile", p);
    }
    if let Some(f) = &c.http_filter {
        attr(&mut out, "http-filter", f);
    }
    if !c.http_filter_extensions.is_empty() {
        let exts: Vec<String> = c
            .http_filter_extensions
            .iter()
            .map(|e| format!(".{e}"))
            .collect();
        attr(&mut out, "http-filter-extensions", &exts.join(" "));
    }
    out.push_str(">\n");
    for h in &c.hosts {
        write_host(&mut out, h);
    }
    out.push_str("</monitor>\n");
    out
}
