//! Compiled-in symbolic names for common MIB-II, HOST-RESOURCES and
//! UCD-SNMP objects. Not a MIB compiler.

static NAMES: &[(&str, &[u32])] = &[
    ("iso", &[1]),
    ("org", &[1, 3]),
    ("dod", &[1, 3, 6]),
    ("internet", &[1, 3, 6, 1]),
    ("mgmt", &[1, 3, 6, 1, 2]),
    ("mib-2", &[1, 3, 6, 1, 2, 1]),
    ("enterprises", &[1, 3, 6, 1, 4, 1]),
    // SNMPv2-MIB system group
    ("system", &[1, 3, 6, 1, 2, 1, 1]),
    ("sysDescr", &[1, 3, 6, 1, 2, 1, 1, 1]),
    ("sysObjectID", &[1, 3, 6, 1, 2, 1, 1, 2]),
    ("sysUpTime", &[1, 3, 6, 1, 2, 1, 1, 3]),
    ("sysContact", &[1, 3, 6, 1, 2, 1, 1, 4]),
    ("sysName", &[1, 3, 6, 1, 2, 1, 1, 5]),
    ("sysLocation", &[1, 3, 6, 1, 2, 1, 1, 6]),
    ("sysServices", &[1, 3, 6, 1, 2, 1, 1, 7]),
    // IF-MIB
    ("interfaces", &[1, 3, 6, 1, 2, 1, 2]),
    ("ifNumber", &[1, 3, 6, 1, 2, 1, 2, 1]),
    ("ifTable", &[1, 3, 6, 1, 2, 1, 2, 2]),
    ("ifEntry", &[1, 3, 6, 1, 2, 1, 2, 2, 1]),
    ("ifDescr", &[1, 3, 6, 1, 2, 1, 2, 2, 1, 2]),
    ("ifSpeed", &[1, 3, 6, 1, 2, 1, 2, 2, 1, 5]),
    ("ifOperStatus", &[1, 3, 6, 1, 2, 1, 2, 2, 1, 8]),
    ("ifInOctets", &[1, 3, 6, 1, 2, 1, 2, 2, 1, 10]),
    ("ifInUcastPkts", &[1, 3, 6, 1, 2, 1, 2, 2, 1, 11]),
    ("ifInErrors", &[1, 3, 6, 1, 2, 1, 2, 2, 1, 14]),
    ("ifOutOctets", &[1, 3, 6, 1, 2, 1, 2, 2, 1, 16]),
    ("ifOutUcastPkts", &[1, 3, 6, 1, 2, 1, 2, 2, 1, 17]),
    ("ifOutErrors", &[1, 3, 6, 1, 2, 1, 2, 2, 1, 20]),
    // HOST-RESOURCES-MIB
    ("host", &[1, 3, 6, 1, 2, 1, 25]),
    ("hrSystem", &[1, 3, 6, 1, 2, 1, 25, 1]),
    ("hrSystemUptime", &[1, 3, 6, 1, 2, 1, 25, 1, 1]),
    ("hrSystemNumUsers", &[1, 3, 6, 1, 2, 1, 25, 1, 5]),
    ("hrSystemProcesses", &[1, 3, 6, 1, 2, 1, 25, 1, 6]),
    ("hrStorage", &[1, 3, 6, 1, 2, 1, 25, 2]),
    ("hrMemorySize", &[1, 3, 6, 1, 2, 1, 25, 2, 2]),
    ("hrStorageTable", &[1, 3, 6, 1, 2, 1, 25, 2, 3]),
    ("hrStorageEntry", &[1, 3, 6, 1, 2, 1, 25, 2, 3, 1]),
    ("hrStorageDescr", &[1, 3, 6, 1, 2, 1, 25, 2, 3, 1, 3]),
    (
        "hrStorageAllocationUnits",
        &[1, 3, 6, 1, 2, 1, 25, 2, 3, 1, 4],
    ),
    ("hrStorageSize", &[1, 3, 6, 1, 2, 1, 25, 2, 3, 1, 5]),
    ("hrStorageUsed", &[1, 3, 6, 1, 2, 1, 25, 2, 3, 1, 6]),
    ("hrProcessorLoad", &[1, 3, 6, 1, 2, 1, 25, 3, 3, 1, 2]),
    // UCD-SNMP-MIB
    ("ucdavis", &[1, 3, 6, 1, 4, 1, 2021]),
    ("memory", &[1, 3, 6, 1, 4, 1, 2021, 4]),
    ("memTotalSwap", &[1, 3, 6, 1, 4, 1, 2021, 4, 3]),
    ("memAvailSwap", &[1, 3, 6, 1, 4, 1, 2021, 4, 4]),
    ("memTotalReal", &[1, 3, 6, 1, 4, 1, 2021, 4, 5]),
    ("memAvailReal", &[1, 3, 6, 1, 4, 1, 2021, 4, 6]),
    ("memTotalFree", &[1, 3, 6, 1, 4, 1, 2021, 4, 11]),
    ("memShared", &[1, 3, 6, 1, 4, 1, 2021, 4, 13]),
    ("memBuffer", &[1, 3, 6, 1, 4, 1, 2021, 4, 14]),
    ("memCached", &[1, 3, 6, 1, 4, 1, 2021, 4, 15]),
    ("dskTable", &[1, 3, 6, 1, 4, 1, 2021, 9]),
    ("dskAvail", &[1, 3, 6, 1, 4, 1, 2021, 9, 1, 7]),
    ("dskUsed", &[1, 3, 6, 1, 4, 1, 2021, 9, 1, 8]),
    ("dskPercent", &[1, 3, 6, 1, 4, 1, 2021, 9, 1, 9]),
    ("laTable", &[1, 3, 6, 1, 4, 1, 2021, 10]),
    ("laLoad", &[1, 3, 6, 1, 4, 1, 2021, 10, 1, 3]),
    ("laLoadInt", &[1, 3, 6, 1, 4, 1, 2021, 10, 1, 5]),
    ("systemStats", &[1, 3, 6, 1, 4, 1, 2021, 11]),
    ("ssCpuUser", &[1, 3, 6, 1, 4, 1, 2021, 11, 9]),
    ("ssCpuSystem", &[1, 3, 6, 1, 4, 1, 2021, 11, 10]),
    ("ssCpuIdle", &[1, 3, 6, 1, 4, 1, 2021, 11, 11]),
    ("ssCpuRawUser", &[1, 3, 6, 1, 4, 1, 2021, 11, 50]),
    ("ssCpuRawSystem", &[1, 3, 6, 1, 4, 1, 2021, 11, 52]),
    ("ssCpuRawIdle", &[1, 3, 6, 1, 4, 1, 2021, 11, 53]),
    ("diskIOTable", &[1, 3, 6, 1, 4, 1, 2021, 13, 15, 1]),
    ("diskIONRead", &[1, 3, 6, 1, 4, 1, 2021, 13, 15, 1, 1, 3]),
    ("diskIONWritten", &[1, 3, 6, 1, 4, 1, 2021, 13, 15, 1, 1, 4]),
    ("diskIOReads", &[1, 3, 6, 1, 4, 1, 2021, 13, 15, 1, 1, 5]),
    ("diskIOWrites", &[1, 3, 6, 1, 4, 1, 2021, 13, 15, 1, 1, 6]),
    (
        "lmTempSensorsValue",
        &[1, 3, 6, 1, 4, 1, 2021, 13, 16, 2, 1, 3],
    ),
];

/// Resolves a single symbolic segment.
pub fn lookup(name: &str) -> Option<&'static [u32]> {
    NAMES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, arcs)| *arcs)
}
