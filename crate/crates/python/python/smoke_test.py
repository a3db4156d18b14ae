"""Smoke test for the iot_taint_py extension module.

Build and run:
    maturin develop -m crates/python/Cargo.toml
    python crates/python/python/smoke_test.py
"""

import json
import pathlib
import sys

import iot_taint_py

ROOT = pathlib.Path(__file__).resolve().parents[3]

APP = """preferences {
    section("s") {
        input "t", "capability.temperatureMeasurement"
        input "phone", "phone"
    }
}
def installed() {
    subscribe(t, "temperature", h)
}
def h(evt) {
    sendSms(phone, "${t.currentTemperature}")
}
"""


def main():
    report = json.loads(iot_taint_py.analyze_source(APP, "smoke.groovy"))
    assert report["app"] == "smoke.groovy", report
    [warning] = report["warnings"]
    assert warning["labels"] == ["DeviceState"], warning
    assert warning["sink"]["kind"] == "Messaging", warning
    assert warning["recipient"]["attribution"] == "User", warning

    text = iot_taint_py.analyze_source(APP, "smoke.groovy", format="text")
    assert text.startswith("app smoke.groovy"), text

    try:
        iot_taint_py.analyze_source("def (", "broken.groovy")
    except ValueError as e:
        assert "broken.groovy" in str(e), e
    else:
        raise AssertionError("parse error was not raised")

    result = json.loads(iot_taint_py.bench(str(ROOT / "corpus" / "iotbench"), jobs=2))
    assert (result["matched"], result["expected"]) == (25, 27), result
    assert result["false_positive_count"] == 2, result

    assert iot_taint_py.default_catalog().count("\nsink\t") == 14
    print("smoke test passed")


if __name__ == "__main__":
    sys.exit(main())
