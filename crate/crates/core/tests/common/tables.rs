//! Reference sink and source tables for the default catalog.

use iot_taint::catalog::{SinkKind, TaintLabel};

pub const SINKS: [(&str, SinkKind); 14] = [
    ("httpDelete", SinkKind::Internet),
    ("httpGet", SinkKind::Internet),
    ("httpHead", SinkKind::Internet),
    ("httpPost", SinkKind::Internet),
    ("httpPostJson", SinkKind::Internet),
    ("httpPut", SinkKind::Internet),
    ("httpPutJson", SinkKind::Internet),
    ("sendSms", SinkKind::Messaging),
    ("sendSmsMessage", SinkKind::Messaging),
    ("sendNotificationEvent", SinkKind::Messaging),
    ("sendNotification", SinkKind::Messaging),
    ("sendNotificationToContacts", SinkKind::Messaging),
    ("sendPush", SinkKind::Messaging),
    ("sendPushMessage", SinkKind::Messaging),
];

pub const ENDPOINTS: [&str; 4] = ["GET", "PUT", "POST", "DELETE"];

const DEVICE_INFO: &[&str] = &[
    "getManufacturerName",
    "getModelName",
    "getName",
    "getSupportedAttributes",
    "getSupportedCommands",
    "hasAttribute",
    "hasCapability",
    "hasCommand",
    "getFirmwareVersionString",
    "getId",
    "getLocalIP",
    "getLocalSrvPortTCP",
    "getDataType",
    "getValues",
    "getType",
    "getZigbeeId",
    "getZigbeeEui",
    "events",
    "eventsBetween",
    "eventsSince",
    "getCapabilities",
    "getDeviceNetworkId",
    "getDisplayName",
    "getHub",
    "getLabel",
    "getLastActivity",
    "getTypeName",
    "capabilities",
];

const DEVICE_STATE: &[&str] = &[
    "latestState",
    "latestValue",
    "statesSince",
    "currentState",
    "currentValue",
    "getStatus",
    "currentTemperature",
];

const EVENT_STATE: &[&str] = &[
    "getArguments",
    "getDateValue",
    "getDescriptionText",
    "getDoubleValue",
    "getFloatValue",
    "getIntegerValue",
    "getJsonValue",
    "getLastUpdated",
    "getLongValue",
    "getName",
    "getNumberValue",
    "getNumericValue",
    "getUnit",
    "getValue",
    "getData",
    "getDate",
    "getDescription",
    "getDevice",
    "getDisplayName",
    "getDeviceId",
    "getIsoDate",
    "getSource",
    "getXyzValue",
    "isPhysical",
    "isStateChange",
    "isDigital",
    "value",
];

const LOCATION: &[&str] = &[
    "getContactBookEnabled",
    "getCurrentMode",
    "getId",
    "getHubs",
    "getLatitude",
    "getLongitude",
    "getMode",
    "setMode",
    "getTimeZone",
    "getZipCode",
    "mode",
];

const LOCATION_OF_EVENT: &[&str] = &["getLocationId", "getLocation"];

const USER_INPUTS: &[&str] = &["text", "time", "number", "phone", "enum"];

/// `(receiver qualifiers, accessed name, expected label)` for every group.
pub fn source_rows() -> Vec<(&'static [&'static str], &'static str, TaintLabel)> {
    let mut rows: Vec<(&'static [&'static str], &'static str, TaintLabel)> = Vec::new();
    rows.extend(
        DEVICE_INFO
            .iter()
            .map(|n| (&["device"][..], *n, TaintLabel::DeviceInfo)),
    );
    rows.push((&["input"], "capability.switch", TaintLabel::DeviceInfo));
    rows.push((&["input"], "capability.temperatureMeasurement", TaintLabel::DeviceInfo));
    rows.extend(
        DEVICE_STATE
            .iter()
            .map(|n| (&["device"][..], *n, TaintLabel::DeviceState)),
    );
    rows.extend(
        EVENT_STATE
            .iter()
            .map(|n| (&["event"][..], *n, TaintLabel::DeviceState)),
    );
    rows.extend(LOCATION.iter().map(|n| (&["location"][..], *n, TaintLabel::Location)));
    rows.extend(
        LOCATION_OF_EVENT
            .iter()
            .map(|n| (&["event"][..], *n, TaintLabel::Location)),
    );
    rows.extend(USER_INPUTS.iter().map(|n| (&["input"][..], *n, TaintLabel::UserInput)));
    rows.push((&["state"], "state", TaintLabel::StateVariable));
    rows.push((&["state"], "atomicState", TaintLabel::StateVariable));
    rows
}
