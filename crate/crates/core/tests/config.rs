use std::path::Path;

use clustermon::config::{check_config, load_config, parse_config, ConfigError, MonitorConfig};
use clustermon::grapher::AtTime;
use clustermon::rrd::{Cf, VarKind};
use clustermon::snmp::Version;

const MINIMAL: &str =
    r#"<monitor><host name="h" polldelay="30"><miblist/><archives/><graphs/></host></monitor>"#;

fn errors(xml: &str) -> Vec<ConfigError> {
    parse_config(xml).expect_err("should be rejected").0
}

fn full() -> String {
    r#"<?xml version="1.0"?>
<!DOCTYPE monitor SYSTEM "monitor.dtd">
<monitor pmc-num-connections="16" pmc-verbosity="1" http-port="8080"
         http-filter="tr a-z A-Z" http-filter-extensions=".html .php">
  <host name="bbr-farm002" ip="10.0.0.2" polldelay="30" tag="farm1,client" snmpversion="1">
    <description>client &amp; worker</description>
    <mailto>ops@example.org</mailto>
    <miblist>
      <mib id="freeMem" name=".1.3.6.1.4.1.2021.4.6.0"/>
      <mib id="net2Out" name="ifOutOctets.2" type="COUNTER" community="private" min="0" max="1.25e8"/>
      <mib id="up" name="system.sysUpTime.0" type="DERIVE"/>
    </miblist>
    <archives>
      <rra granularity="60" expire="604800"/>
      <rra cf="MAX" xff="0.5" granularity="3600" expire="2678400"/>
    </archives>
    <graphs>
      <rrdgraph id="hourly.png" title="Hourly data" seconds="-1h">
        <line>DEF:f=freeMem:AVERAGE</line>
        <line>CDEF:mb=f,1024,/</line>
        <line>LINE2:mb#00FF00:free MB</line>
      </rrdgraph>
    </graphs>
  </host>
</monitor>
"#
    .to_string()
}

#[test]
fn minimal_document_defaults() {
    let c = parse_config(MINIMAL).unwrap();
    assert_eq!(c.http_port, 8001);
    assert_eq!(c.num_connections, 50);
    assert_eq!(c.verbosity, 3);
    assert_eq!(c.rrd_dir, Path::new("."));
    assert_eq!(c.xslt_dir, Path::new("."));
    assert_eq!(c.html_dir, Path::new("."));
    assert!(c.pmc_logfile.is_none() && c.http_logfile.is_none() && c.http_filter.is_none());
    assert!(c.http_filter_extensions.is_empty());
    let h = &c.hosts[0];
    assert_eq!(h.ip, "h");
    assert_eq!(h.snmp_version, Version::V2c);
    assert!(h.tags.is_empty());
}

#[test]
fn element_defaults() {
    let c = parse_config(
        r#"<monitor><host name="h" polldelay="30"><miblist><mib id="a" name=".1.3.6.1"/></miblist>
        <archives><rra granularity="30" expire="60"/></archives>
        <graphs><rrdgraph id="g.png" title="t"><line>DEF:a=a:AVERAGE</line><line>LINE1:a#000000</line></rrdgraph></graphs>
        </host></monitor>"#,
    )
    .unwrap();
    let h = &c.hosts[0];
    assert_eq!(h.mibs[0].kind, VarKind::Gauge);
    assert_eq!(h.mibs[0].community, "public");
    assert_eq!((h.mibs[0].min, h.mibs[0].max), (None, None));
    assert_eq!(h.rras[0].cf, Cf::Average);
    assert_eq!(h.rras[0].xff, 0.8);
    let g = &h.graphs[0];
    assert_eq!((g.width, g.height), (400, 180));
    assert_eq!(g.seconds, AtTime::Relative(-3 * 3600));
}

#[test]
fn full_document() {
    let c = parse_config(&full()).unwrap();
    assert_eq!(c.num_connections, 16);
    assert_eq!(c.http_filter_extensions, ["html", "php"]);
    let h = &c.hosts[0];
    assert_eq!(h.tags, ["farm1", "client"]);
    assert_eq!(h.snmp_version, Version::V1);
    assert_eq!(h.description.as_deref(), Some("client & worker"));
    assert_eq!(h.mibs[1].oid.to_string(), ".1.3.6.1.2.1.2.2.1.16.2");
    assert_eq!(h.mibs[1].max, Some(1.25e8));
    assert_eq!(h.mibs[2].oid.to_string(), ".1.3.6.1.2.1.1.3.0");
    assert_eq!(h.rras[1].cf, Cf::Max);
    assert_eq!(h.graphs[0].program.vars.len(), 2);
}

#[test]
fn reserialization_is_a_fixpoint() {
    for text in [MINIMAL.to_string(), full()] {
        let a = parse_config(&text).unwrap();
        let b = parse_config(&a.to_xml()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_xml(), b.to_xml());
    }
}

#[test]
fn structural_violations() {
    let missing =
        errors(r#"<monitor><host name="h"><miblist/><archives/><graphs/></host></monitor>"#);
    assert!(
        matches!(&missing[0], ConfigError::SchemaViolation { element, message, .. }
        if element == "host" && message.contains("polldelay"))
    );

    let order = errors(
        r#"<monitor><host name="h" polldelay="5"><archives/><miblist/><graphs/></host></monitor>"#,
    );
    assert!(order
        .iter()
        .all(|e| matches!(e, ConfigError::SchemaViolation { .. })));

    let no_hosts = errors("<monitor/>");
    assert!(matches!(&no_hosts[0], ConfigError::SchemaViolation { .. }));

    let enum_value = errors(
        r#"<monitor><host name="h" polldelay="5" snmpversion="3"><miblist/><archives/><graphs/></host></monitor>"#,
    );
    assert!(
        matches!(&enum_value[0], ConfigError::SchemaViolation { message, .. } if message.contains("snmpversion"))
    );

    let stray = errors(
        r#"<monitor bogus="1"><host name="h" polldelay="5"><miblist/><archives/><graphs/></host></monitor>"#,
    );
    assert!(
        matches!(&stray[0], ConfigError::SchemaViolation { message, .. } if message.contains("bogus"))
    );

    let empty_graph = errors(
        r#"<monitor><host name="h" polldelay="5"><miblist/><archives/><graphs><rrdgraph id="g.png" title="t"/></graphs></host></monitor>"#,
    );
    assert!(
        matches!(&empty_graph[0], ConfigError::SchemaViolation { element, .. } if element == "rrdgraph")
    );
}

#[test]
fn duplicates() {
    let e = errors(
        r#"<monitor><host name="a" polldelay="5"><miblist/><archives/><graphs/></host>
        <host name="a" polldelay="5"><miblist/><archives/><graphs/></host></monitor>"#,
    );
    assert!(matches!(&e[0], ConfigError::DuplicateId { id, line: 2, .. } if id == "a"));
    let e = errors(
        r#"<monitor><host name="a" polldelay="5"><miblist><mib id="x" name=".1.3"/><mib id="x" name=".1.4"/></miblist><archives/><graphs/></host></monitor>"#,
    );
    assert!(matches!(&e[0], ConfigError::DuplicateId { id, .. } if id == "x"));
    // graph ids only need to be unique within a host
    parse_config(
        r#"<monitor>
        <host name="a" polldelay="5"><miblist><mib id="x" name=".1.3"/></miblist><archives/><graphs><rrdgraph id="g.png" title="t"><line>DEF:x=x:AVERAGE</line><line>LINE1:x#000000</line></rrdgraph></graphs></host>
        <host name="b" polldelay="5"><miblist><mib id="x" name=".1.3"/></miblist><archives/><graphs><rrdgraph id="g.png" title="t"><line>DEF:x=x:AVERAGE</line><line>LINE1:x#000000</line></rrdgraph></graphs></host>
        </monitor>"#,
    )
    .unwrap();
}

#[test]
fn bad_values() {
    let e = errors(
        r#"<monitor><host name="h" polldelay="soon"><miblist/><archives/><graphs/></host></monitor>"#,
    );
    assert!(matches!(&e[0], ConfigError::BadValue { attribute, .. } if attribute == "polldelay"));
    let e = errors(
        r#"<monitor><host name="h" polldelay="30"><miblist/><archives><rra xff="1.5" granularity="30" expire="60"/></archives><graphs/></host></monitor>"#,
    );
    assert!(
        matches!(&e[0], ConfigError::BadValue { element, attribute, .. } if element == "rra" && attribute == "xff")
    );
    let e = errors(
        r#"<monitor><host name="h" polldelay="30"><miblist/><archives><rra granularity="45" expire="90"/></archives><graphs/></host></monitor>"#,
    );
    assert!(matches!(&e[0], ConfigError::SchemaViolation { element, .. } if element == "rra"));
    let e = errors(
        r#"<monitor><host name="h" polldelay="30"><miblist><mib id="a" name="foo.bar"/></miblist><archives/><graphs/></host></monitor>"#,
    );
    assert!(matches!(&e[0], ConfigError::BadValue { attribute, .. } if attribute == "name"));
    let e = errors(
        r#"<monitor http-port="0"><host name="h" polldelay="30"><miblist/><archives/><graphs/></host></monitor>"#,
    );
    assert!(matches!(&e[0], ConfigError::BadValue { attribute, .. } if attribute == "http-port"));
    let e = errors(
        r#"<monitor><host name="h" polldelay="30"><miblist><mib id="a" name=".1.3" min="5" max="1"/></miblist><archives/><graphs/></host></monitor>"#,
    );
    assert!(matches!(&e[0], ConfigError::BadValue { attribute, .. } if attribute == "min"));
    let e = errors(
        r#"<monitor><host name="h" polldelay="30"><miblist/><archives/><graphs><rrdgraph id="g.png" title="t"><line>DEF:f=missing:AVERAGE</line><line>LINE1:f#000000</line></rrdgraph></graphs></host></monitor>"#,
    );
    assert!(matches!(&e[0], ConfigError::BadValue { attribute, .. } if attribute == "line"));
    let e = errors(
        r#"<monitor><host name="../etc" polldelay="30"><miblist/><archives/><graphs/></host></monitor>"#,
    );
    assert!(matches!(&e[0], ConfigError::BadValue { attribute, .. } if attribute == "name"));
}

#[test]
fn every_problem_is_reported() {
    let e = errors(
        r#"<monitor pmc-verbosity="9"><host name="h" polldelay="0"><miblist/><archives><rra xff="2" granularity="30" expire="60"/></archives><graphs/></host></monitor>"#,
    );
    assert_eq!(e.len(), 3, "{e:?}");
}

#[test]
fn malformed_xml() {
    let e = errors("<monitor><host>");
    assert!(matches!(&e[0], ConfigError::WellFormedness { .. }));
}

#[test]
fn files_and_relative_dirs() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("monitor.xml");
    std::fs::write(
        &path,
        r#"<monitor pmc-rrd-dir="rrd" pmc-xslt-dir="/abs/xslt"><host name="h" polldelay="30"><miblist/><archives/><graphs/></host></monitor>"#,
    )
    .unwrap();
    let c: MonitorConfig = load_config(&path).unwrap();
    assert_eq!(c.rrd_dir, dir.path().join("rrd"));
    assert_eq!(c.xslt_dir, Path::new("/abs/xslt"));
    assert_eq!(c.html_dir, dir.path());
    assert!(check_config(&path).unwrap().is_empty());

    let bad = dir.path().join("bad.xml");
    std::fs::write(
        &bad,
        r#"<monitor><host name="h" polldelay="30"><miblist/><archives><rra xff="1.5" granularity="30" expire="60"/></archives><graphs/></host></monitor>"#,
    )
    .unwrap();
    let diags = check_config(&bad).unwrap();
    assert_eq!(diags.len(), 1);
    assert!(matches!(&diags[0], ConfigError::BadValue { element, .. } if element == "rra"));

    assert!(matches!(
        check_config(&dir.path().join("nope.xml")),
        Err(ConfigError::Io { .. })
    ));
}
