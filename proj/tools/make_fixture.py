#!/usr/bin/env python3
# Copyright 2026 The Vulnspace Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Writes a small synthetic NVD 1.1 feed and matching word vectors.

Descriptions are drawn from a handful of weakness themes so the pipeline
has structure to find. Output is deterministic for a given seed.
"""

import argparse
import json
import os
import random

PRODUCTS = [
    ("microsoft", "internet_explorer", "Internet Explorer"),
    ("microsoft", "windows_server", "Windows Server"),
    ("linux", "linux_kernel", "Linux kernel"),
    ("google", "chrome", "Google Chrome"),
    ("apache", "http_server", "Apache HTTP Server"),
    ("adobe", "flash_player", "Adobe Flash Player"),
    ("wordpress", "wordpress", "WordPress"),
    ("php", "php", "PHP"),
    ("oracle", "mysql", "MySQL"),
    ("openssl", "openssl", "OpenSSL"),
]

# theme: (cwe, phrases, v3 vector, v2 vector)
THEMES = {
    "sqli": (
        "CWE-89",
        ["SQL injection vulnerability in {p} allows remote attackers to execute arbitrary SQL commands via the {f} parameter",
         "{p} does not properly sanitize the {f} parameter which allows remote attackers to inject SQL queries"],
        dict(AV="NETWORK", AC="LOW", PR="NONE", UI="NONE", S="UNCHANGED", C="HIGH", I="HIGH", A="HIGH"),
        dict(AV="NETWORK", AC="LOW", Au="NONE", C="PARTIAL", I="PARTIAL", A="PARTIAL"),
    ),
    "xss": (
        "CWE-79",
        ["Cross-site scripting vulnerability in {p} allows remote attackers to inject arbitrary web script or HTML via the {f} parameter",
         "Reflected XSS in the {f} page of {p} lets attackers inject script into a victim browser session"],
        dict(AV="NETWORK", AC="LOW", PR="NONE", UI="REQUIRED", S="CHANGED", C="LOW", I="LOW", A="NONE"),
        dict(AV="NETWORK", AC="MEDIUM", Au="NONE", C="NONE", I="PARTIAL", A="NONE"),
    ),
    "overflow": (
        "CWE-119",
        ["Buffer overflow in the {f} function in {p} allows attackers to cause a denial of service memory corruption or possibly execute arbitrary code via a crafted file",
         "Heap-based buffer overflow in {p} before 2.4.1 allows local users to gain privileges via a long {f} argument"],
        dict(AV="LOCAL", AC="LOW", PR="LOW", UI="NONE", S="UNCHANGED", C="HIGH", I="HIGH", A="HIGH"),
        dict(AV="LOCAL", AC="LOW", Au="NONE", C="COMPLETE", I="COMPLETE", A="COMPLETE"),
    ),
    "dos": (
        "CWE-400",
        ["{p} allows remote attackers to cause a denial of service resource consumption via a flood of {f} requests",
         "Uncontrolled resource consumption in the {f} handler of {p} lets remote attackers crash the service"],
        dict(AV="NETWORK", AC="LOW", PR="NONE", UI="NONE", S="UNCHANGED", C="NONE", I="NONE", A="HIGH"),
        dict(AV="NETWORK", AC="LOW", Au="NONE", C="NONE", I="NONE", A="COMPLETE"),
    ),
    "info": (
        "CWE-200",
        ["{p} discloses sensitive information in the {f} response which allows remote attackers to obtain credentials",
         "Information exposure in {p} allows authenticated users to read the {f} configuration including passwords"],
        dict(AV="NETWORK", AC="HIGH", PR="LOW", UI="NONE", S="UNCHANGED", C="HIGH", I="NONE", A="NONE"),
        dict(AV="NETWORK", AC="MEDIUM", Au="SINGLE", C="PARTIAL", I="NONE", A="NONE"),
    ),
}

FIELDS = ["search", "login", "id", "username", "comment", "upload", "query", "title", "admin", "profile"]


def tokens(text):
    out = []
    for w in text.lower().replace("-", " ").split():
        w = "".join(ch for ch in w if ch.isalnum() or ch in "._")
        if w:
            out.append(w)
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", required=True)
    ap.add_argument("--records", type=int, default=200)
    ap.add_argument("--dim", type=int, default=50)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    os.makedirs(args.out, exist_ok=True)

    items = []
    vocab = set()
    names = list(THEMES)
    for i in range(args.records):
        theme = names[i % len(names)] if i < len(names) * 4 else rng.choice(names)
        cwe, phrases, v3, v2 = THEMES[theme]
        vendor, product, pname = rng.choice(PRODUCTS)
        text = rng.choice(phrases).format(p=pname, f=rng.choice(FIELDS))
        vocab.update(tokens(text))
        year = 2015 + (i * 6) // args.records
        day = rng.randrange(1, 28)
        month = rng.randrange(1, 13)
        impact = {}
        if rng.random() < 0.95:
            impact["baseMetricV3"] = {"cvssV3": {
                "version": "3.1", "baseScore": round(rng.uniform(3, 10), 1),
                "attackVector": v3["AV"], "attackComplexity": v3["AC"], "privilegesRequired": v3["PR"],
                "userInteraction": v3["UI"], "scope": v3["S"], "confidentialityImpact": v3["C"],
                "integrityImpact": v3["I"], "availabilityImpact": v3["A"]}}
        impact["baseMetricV2"] = {
            "cvssV2": {"version": "2.0", "baseScore": round(rng.uniform(2, 10), 1),
                       "accessVector": v2["AV"], "accessComplexity": v2["AC"], "authentication": v2["Au"],
                       "confidentialityImpact": v2["C"], "integrityImpact": v2["I"], "availabilityImpact": v2["A"]},
            "userInteractionRequired": theme == "xss",
        }
        items.append({
            "cve": {
                "data_type": "CVE", "data_format": "MITRE", "data_version": "4.0",
                "CVE_data_meta": {"ID": "CVE-%d-%04d" % (year, 1000 + i), "ASSIGNER": "cve@mitre.org"},
                "problemtype": {"problemtype_data": [{"description": [{"lang": "en", "value": cwe}]}]},
                "description": {"description_data": [{"lang": "en", "value": text}]},
            },
            "configurations": {"CVE_data_version": "4.0", "nodes": [{"operator": "OR", "children": [], "cpe_match": [
                {"vulnerable": True, "cpe23Uri": "cpe:2.3:a:%s:%s:*:*:*:*:*:*:*:*" % (vendor, product)}]}]},
            "impact": impact,
            "publishedDate": "%d-%02d-%02dT10:00Z" % (year, month, day),
        })
    feed = {"CVE_data_type": "CVE", "CVE_data_format": "MITRE", "CVE_data_version": "4.0",
            "CVE_data_numberOfCVEs": str(len(items)), "CVE_data_timestamp": "2021-01-01T00:00Z",
            "CVE_Items": items}
    with open(os.path.join(args.out, "nvdcve-1.1-fixture.json"), "w") as f:
        json.dump(feed, f, indent=1, sort_keys=True)

    # Words of one theme sit near a shared center.
    centers = {t: [rng.gauss(0, 1) for _ in range(args.dim)] for t in names}
    home = {}
    for t in names:
        for p in THEMES[t][1]:
            for w in tokens(p.replace("{p}", "").replace("{f}", "")):
                home.setdefault(w, t)
    words = sorted(vocab | {w for _, _, n in PRODUCTS for w in tokens(n)} | {p for _, p, _ in PRODUCTS})
    with open(os.path.join(args.out, "vectors.vec"), "w") as f:
        f.write("%d %d\n" % (len(words), args.dim))
        for w in words:
            c = centers.get(home.get(w), [0.0] * args.dim)
            v = [c[k] + rng.gauss(0, 0.5) for k in range(args.dim)]
            f.write(w + " " + " ".join("%.5f" % x for x in v) + "\n")


if __name__ == "__main__":
    main()
