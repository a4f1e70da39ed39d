#!/usr/bin/env python3
"""Deterministic fixture generator.

Produces the stats corpora (223 dictations averaging 185 whitespace tokens;
100 dialogues carrying 255 gold orders), the 20-case malformed-output
corpus, and the golden pipeline inputs. Rerunning reproduces every file
byte-for-byte.
"""

import json
import os
import random

ROOT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "fixtures")


def write(path, text):
    path = os.path.join(ROOT, path)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)
    print(f"wrote {path}")


def jsonl(records):
    return "".join(json.dumps(r, ensure_ascii=False, separators=(",", ":")) + "\n" for r in records)


# ---------------------------------------------------------------- SYNUR-style
# 223 dictations, average whitespace-token length exactly 185.

OPENERS = [
    "Okay so this is the day shift note for the patient in bed {n}.",
    "Alright, quick update on the patient in room {n} this morning.",
    "This is the overnight summary for bed {n}, recorded at end of shift.",
    "Noting down the afternoon assessment for the patient in room {n}.",
]

BODY_SENTENCES = [
    "Patient is resting comfortably and responds appropriately to questions.",
    "Blood pressure this morning was {bp1} over {bp2}, pulse rate steady at {pulse}.",
    "Respiration rate {resp} and oxygen saturation {spo2} percent on room air.",
    "Temperature taken orally at {temp1} point {temp2} degrees, no chills reported.",
    "Urine output around {urine} milliliters over the shift, colour pale yellow.",
    "Patient denies any chest pain or shortness of breath at this time.",
    "Pain rated {pain} out of 10, um, mostly localized to the lower back.",
    "Wound site on the left forearm was cleaned and dressed, edges look, uh, clean.",
    "Abdomen is soft and rounded, bowel sounds present in all four quadrants.",
    "Patient ambulated to the hallway twice with standby assistance today.",
    "Appetite remains fair, ate about half of the lunch tray, tolerating fluids well.",
    "IV site in the right hand is patent, no redness or swelling noted around it.",
    "Patient was oriented to person, place and time throughout the assessment.",
    "Skin is warm and dry, no new bruising or breakdown observed on turning.",
    "Breath sounds clear bilaterally, no wheezing or crackles on auscultation.",
    "Medications given as scheduled, no adverse reactions observed so far.",
    "Family visited in the afternoon, patient mood notably brighter afterwards.",
    "Call light within reach, bed in lowest position, side rails up times two.",
    "Plan is to continue monitoring vitals every four hours through the night.",
    "Will follow up with the care team about the, sorry, about the diet order.",
]

CLOSERS = [
    "That is all for this entry, will reassess after rounds.",
    "Nothing else acute to report, end of note.",
    "Handing off to the next shift, no outstanding concerns.",
    "Will update again if anything changes overnight.",
]

FILLER_WORDS = [
    "monitoring", "continuing", "stable", "overnight", "reassessment",
    "scheduled", "tolerated", "unchanged", "documented", "reviewed",
]


def fill(sentence, rng):
    return sentence.format(
        n=rng.randint(1, 40),
        bp1=rng.randint(100, 150),
        bp2=rng.randint(55, 95),
        pulse=rng.randint(58, 110),
        resp=rng.randint(12, 24),
        spo2=rng.randint(90, 100),
        temp1=rng.randint(36, 38),
        temp2=rng.randint(0, 9),
        urine=rng.choice([200, 250, 300, 350, 400]),
        pain=rng.randint(0, 9),
    )


def tokens(s):
    return len(s.split())


def synur_corpus():
    rng = random.Random(20250810)
    n_docs, target_avg = 223, 185
    total_target = n_docs * target_avg
    # Vary doc lengths around the mean, fixing the residual on the last doc.
    lengths = []
    for i in range(n_docs - 1):
        lengths.append(target_avg + ((i * 37) % 91) - 45)
    lengths.append(total_target - sum(lengths))
    assert sum(lengths) == total_target
    assert 100 < lengths[-1] < 260, lengths[-1]

    records = []
    for i, target in enumerate(lengths):
        sentences = [fill(rng.choice(OPENERS), rng)]
        count = tokens(sentences[0])
        body = BODY_SENTENCES[:]
        rng.shuffle(body)
        for template in body * 3:
            s = fill(template, rng)
            # Keep room for a closer (up to 10 tokens) and filler.
            if count + tokens(s) > target - 12:
                continue
            sentences.append(s)
            count += tokens(s)
        closer = rng.choice(CLOSERS)
        count += tokens(closer)
        # Pad to the exact target with a final status sentence.
        remaining = target - count
        if remaining < 2:
            # Swap the closer for a shorter one if we overshot.
            closer = "End of note."
            count = sum(tokens(s) for s in sentences) + tokens(closer)
            remaining = target - count
        assert remaining >= 2, (i, remaining)
        pad = ["Also"] + [FILLER_WORDS[(i + j) % len(FILLER_WORDS)] for j in range(remaining - 2)]
        sentences.append(" ".join(pad + ["noted."]))
        sentences.append(closer)
        doc_tokens = sum(tokens(s) for s in sentences)
        assert doc_tokens == target, (i, doc_tokens, target)

        turns = [
            {"line_no": j + 1, "speaker": "nurse", "text": s}
            for j, s in enumerate(sentences)
        ]
        records.append({"id": f"synur-{i + 1:04d}", "source": "synur", "turns": turns})
    write("stats/synur/corpus.jsonl", jsonl(records))


# ---------------------------------------------------------------- SIMORD-style
# 100 dialogues, 255 gold orders across them.

COMPLAINTS = [
    ("a dry cough that has lasted three weeks", "persistent cough"),
    ("sharp pain in my right side", "right flank pain"),
    ("headaches nearly every morning", "recurring headaches"),
    ("swelling in both ankles", "bilateral ankle swelling"),
    ("feeling dizzy when I stand up", "orthostatic dizziness"),
    ("a rash spreading on my arm", "spreading rash"),
    ("trouble sleeping through the night", "insomnia"),
    ("heartburn after most meals", "frequent heartburn"),
]

ORDER_BANK = [
    ("chest x-ray", "imaging", "evaluate persistent cough", "We should get a chest x-ray to take a closer look."),
    ("CT of the abdomen", "imaging", "localize the pain", "I want a CT of the abdomen to localize this."),
    ("complete blood count", "lab", "check for infection", "Let's run a complete blood count first."),
    ("comprehensive metabolic panel", "lab", "assess kidney and liver function", "We'll add a comprehensive metabolic panel as well."),
    ("lipid panel", "lab", "cardiovascular risk assessment", "A lipid panel is due given your history."),
    ("amoxicillin 500 mg twice daily", "medication", "treat the suspected infection", "I'm starting you on amoxicillin 500 mg twice daily."),
    ("lisinopril 10 mg daily", "medication", "blood pressure control", "We'll begin lisinopril 10 mg daily for the pressure."),
    ("omeprazole 20 mg daily", "medication", "reduce stomach acid", "Take omeprazole 20 mg every morning before breakfast."),
    ("follow-up visit in two weeks", "followup", "reassess symptoms", "Come back in two weeks so we can reassess."),
    ("referral to cardiology", "followup", "specialist evaluation", "I'm sending a referral to cardiology for you."),
    ("renal ultrasound", "imaging", "rule out kidney stones", "An ultrasound of the kidneys will rule out stones."),
    ("thyroid function panel", "lab", "screen for thyroid disease", "We should check your thyroid function too."),
]

SMALL_TALK = [
    ("patient", "Thank you, doctor."),
    ("patient", "Okay, that makes sense."),
    ("doctor", "Any allergies I should know about?"),
    ("patient", "None that I know of."),
    ("doctor", "How long has this been going on?"),
    ("patient", "About two or three weeks now."),
    ("doctor", "Are you taking any medication at the moment?"),
    ("patient", "Just a multivitamin."),
]


def simord_corpus():
    rng = random.Random(20240550)
    n_docs = 100
    # 55 docs carry 3 orders, 45 carry 2: 55*3 + 45*2 = 255.
    order_counts = [3] * 55 + [2] * 45
    rng.shuffle(order_counts)
    assert sum(order_counts) == 255

    transcripts, gold = [], []
    for i in range(n_docs):
        complaint, diagnosis = rng.choice(COMPLAINTS)
        turns = [
            ("doctor", "Good morning, what brings you in today?"),
            ("patient", f"I've been dealing with {complaint}."),
        ]
        for _ in range(rng.randint(1, 3)):
            turns.append(rng.choice(SMALL_TALK))
        orders = []
        picked = rng.sample(ORDER_BANK, order_counts[i])
        for desc, order_type, reason, line in picked:
            turns.append(("doctor", line))
            orders.append(
                {
                    "description": desc,
                    "order_type": order_type,
                    "reason": reason,
                    "provenance": [len(turns)],
                }
            )
            if rng.random() < 0.4:
                turns.append(rng.choice(SMALL_TALK))
        turns.append(("doctor", "We'll get all of that arranged before you leave."))

        doc_id = f"simord-test-{i + 1:03d}"
        transcripts.append(
            {
                "id": doc_id,
                "source": rng.choice(["acibench", "primock"]),
                "turns": [
                    {"line_no": j + 1, "speaker": s, "text": t}
                    for j, (s, t) in enumerate(turns)
                ],
            }
        )
        gold.append({"transcript_id": doc_id, "orders": orders})

    write("stats/simord/test.transcripts.jsonl", jsonl(transcripts))
    write("stats/simord/test.orders.jsonl", jsonl(gold))


# ---------------------------------------------------------- malformed corpus

def malformed_corpus():
    runon = "[{\"description\":\"CBC\",\"order_type\":\"lab\",\"provenance\":[" + \
        ", ".join(str(n) for n in range(1, 2001))
    cases = [
        {"name": "fenced-json", "text": "```json\n[{\"description\":\"CBC\",\"order_type\":\"lab\"}]\n```", "recoverable": True},
        {"name": "fenced-bare", "text": "```\n{\"Pulse rate\": 88}\n```", "recoverable": True},
        {"name": "fence-unclosed", "text": "```json\n[{\"description\":\"lipid panel\",\"order_type\":\"lab\"}]", "recoverable": True},
        {"name": "prose-preamble", "text": "Here are the extracted orders as requested: [{\"description\":\"chest x-ray\",\"order_type\":\"imaging\"}]", "recoverable": True},
        {"name": "prose-both-sides", "text": "Sure! [{\"description\":\"MRI brain\",\"order_type\":\"imaging\"}] Hope this helps!", "recoverable": True},
        {"name": "prose-apology", "text": "Note that I found only one order.\n\n[{\"description\":\"amoxicillin\",\"order_type\":\"medication\"}]\n\nLet me know if you need more detail.", "recoverable": True},
        {"name": "prose-and-fence", "text": "The output is:\n```json\n[{\"description\":\"renal ultrasound\",\"order_type\":\"imaging\"}]\n```\nDone.", "recoverable": True},
        {"name": "trailing-comma-object", "text": "[{\"description\":\"CBC\",\"order_type\":\"lab\",}]", "recoverable": True},
        {"name": "trailing-comma-array", "text": "[{\"description\":\"CBC\",\"order_type\":\"lab\",\"provenance\":[4,5,]}]", "recoverable": True},
        {"name": "trailing-comma-nested", "text": "{\"Urine colour\": \"dark yellow\", \"Pulse rate\": 88,}", "recoverable": True},
        {"name": "runon-provenance", "text": runon, "recoverable": True},
        {"name": "runon-closed", "text": "[{\"description\":\"CBC\",\"order_type\":\"lab\",\"provenance\":[" + ", ".join(str(n) for n in range(1, 1501)) + "]}]", "recoverable": True},
        {"name": "runon-then-cut", "text": "[{\"description\":\"CMP\",\"order_type\":\"lab\",\"provenance\":[" + ",".join(str(n) for n in range(1, 901)) + ",9", "recoverable": True},
        {"name": "cut-mid-string", "text": "[{\"description\":\"follow-up visit in two we", "recoverable": True},
        {"name": "cut-mid-object", "text": "[{\"description\":\"omeprazole 20 mg\",\"order_type\":\"medication\",\"reason\":\"reflux\"", "recoverable": True},
        {"name": "cut-after-comma", "text": "[{\"description\":\"CBC\",\"order_type\":\"lab\"},", "recoverable": True},
        {"name": "single-object-root", "text": "{\"description\":\"chest x-ray\",\"order_type\":\"imaging\",\"provenance\":[12]}", "recoverable": True},
        {"name": "fence-prose-comma", "text": "Output:\n```json\n[{\"description\":\"lisinopril 10 mg\",\"order_type\":\"medication\",},]\n```", "recoverable": True},
        {"name": "refusal-prose", "text": "I could not find any structured orders in this conversation.", "recoverable": False},
        {"name": "empty-response", "text": "", "recoverable": False},
    ]
    assert len(cases) == 20
    assert sum(c["recoverable"] for c in cases) == 18  # 90% recovery floor
    write("malformed/cases.jsonl", jsonl(cases))


# ------------------------------------------------------------- golden: orders

def golden_orders():
    os.makedirs(os.path.join(ROOT, "golden/orders/transcripts"), exist_ok=True)
    visit1 = (
        "1\tdoctor\tGood morning, what brings you in today?\n"
        "2\tpatient\tI have had a nasty cough for two weeks and some chest pain.\n"
        "3\tdoctor\tGiven the duration we should get a CT of the chest to rule out infection.\n"
        "4\tpatient\tOkay, whatever you think is best.\n"
        "5\tdoctor\tI will also start you on amoxicillin five hundred milligrams twice daily.\n"
        "6\tdoctor\tAnd let us schedule a follow-up visit in two weeks to check progress.\n"
    )
    visit2 = (
        "1\tdoctor\tYour labs from last time looked mostly fine.\n"
        "2\tpatient\tThat is a relief to hear.\n"
        "3\tdoctor\tI still want a comprehensive metabolic panel to keep an eye on your kidneys.\n"
        "4\tpatient\tSure, I can stop by the lab this week.\n"
    )
    write("golden/orders/transcripts/visit-001.tsv", visit1)
    write("golden/orders/transcripts/visit-002.tsv", visit2)

    orders1 = [
        {"description": "CT of the chest", "order_type": "imaging", "reason": "rule out infection", "provenance": [3]},
        {"description": "amoxicillin five hundred milligrams twice daily", "order_type": "medication", "reason": "persistent cough", "provenance": [5]},
        {"description": "follow-up visit in two weeks", "order_type": "followup", "reason": "check progress", "provenance": [6]},
    ]
    orders2 = [
        {"description": "comprehensive metabolic panel", "order_type": "lab", "reason": "monitor kidney function", "provenance": [3]},
    ]
    write(
        "golden/orders/refs.jsonl",
        jsonl(
            [
                {"transcript_id": "visit-001", "orders": orders1},
                {"transcript_id": "visit-002", "orders": orders2},
            ]
        ),
    )
    # Scripted responses, one per transcript in sorted-id order.
    responses = {
        "mode": "queue",
        "responses": [
            json.dumps(orders1, separators=(",", ":")),
            json.dumps(orders2, separators=(",", ":")),
        ],
    }
    write("golden/orders/responses.json", json.dumps(responses, indent=2) + "\n")

    # Few-shot training pool (prompt-side only; the queue ignores prompts).
    train = [
        {
            "id": "train-001",
            "transcript_text": "1: doctor: Your blood sugar has been creeping up.\n2: patient: I was worried about that.\n3: doctor: Let's get a hemoglobin A1C before your next visit.",
            "gold": {"orders": [{"description": "hemoglobin A1C", "order_type": "lab", "reason": "monitor blood sugar", "provenance": [3]}]},
        },
        {
            "id": "train-002",
            "transcript_text": "1: doctor: That ankle still looks swollen.\n2: doctor: We'll get an x-ray of the ankle today.",
            "gold": {"orders": [{"description": "x-ray of the ankle", "order_type": "imaging", "reason": "persistent swelling", "provenance": [2]}]},
        },
        {
            "id": "train-003",
            "transcript_text": "1: doctor: Your reflux sounds worse at night.\n2: doctor: Start omeprazole twenty milligrams each morning.\n3: patient: Will do.",
            "gold": {"orders": [{"description": "omeprazole twenty milligrams each morning", "order_type": "medication", "reason": "nighttime reflux", "provenance": [2]}]},
        },
    ]
    write("golden/orders/train.jsonl", jsonl(train))


# -------------------------------------------------------------- golden: nurse

def golden_nurse():
    schema = {
        "hospital_id": "demo-general",
        "rows": [
            {"key": "Patient resting", "data_type": "boolean"},
            {"key": "Blood pressure", "data_type": "free_text"},
            {"key": "Pulse rate", "data_type": "numeric"},
            {"key": "Temperature", "data_type": "numeric"},
            {"key": "Respiration rate", "data_type": "numeric"},
            {"key": "Oxygen saturation", "data_type": "numeric"},
            {"key": "Breath sounds", "data_type": "picklist", "allowed_values": ["clear", "coarse", "diminished", "wheezing"]},
            {"key": "Urine output", "data_type": "numeric"},
            {"key": "Urine colour", "data_type": "picklist", "allowed_values": ["pale yellow", "dark yellow", "amber", "red"]},
            {"key": "Pain present", "data_type": "boolean"},
            {"key": "Pain severity", "data_type": "numeric"},
            {"key": "Wound care", "data_type": "multi_select", "allowed_values": ["cleaned", "dressed", "irrigated"]},
        ],
    }
    write("golden/nurse/schema.json", json.dumps(schema, indent=2) + "\n")

    d1 = (
        "1\tnurse\tPatient in room four is resting comfortably this morning.\n"
        "2\tnurse\tBlood pressure one twenty seven over sixty six, pulse rate 88, temperature 37.1.\n"
        "3\tnurse\tRespiration rate 16, oxygen saturation 94 percent, breath sounds clear.\n"
        "4\tnurse\tUrine output 300 milliliters, urine colour dark yellow.\n"
        "5\tnurse\tPain present at severity 4 out of 10, wound cleaned and dressed.\n"
    )
    d2 = (
        "1\tnurse\tSecond patient alert and oriented, no pain reported this shift.\n"
        "2\tnurse\tPulse rate 72 and blood pressure 118 over 75.\n"
    )
    write("golden/nurse/transcripts/dictation-001.tsv", d1)
    write("golden/nurse/transcripts/dictation-002.tsv", d2)

    responses = {
        "mode": "queue",
        "responses": [
            # dictation-001: segmentation, then one extraction per segment
            json.dumps(["Patient in room four", "Blood pressure", "Respiration rate", "Urine output", "Pain present"]),
            json.dumps({"Patient resting": {"value": "yes", "span": "resting comfortably this morning"}}),
            json.dumps({
                "Blood pressure": {"value": "127/66", "span": "one twenty seven over sixty six"},
                "Pulse rate": 88,
                "Temperature": 37.1,
            }),
            json.dumps({"Respiration rate": 16, "Oxygen saturation": 94, "Breath sounds": "clear"}),
            json.dumps({"Urine output": 300, "Urine colour": "dark yellow"}),
            json.dumps({
                "Pain present": "yes",
                "Pain severity": "4 out of 10",
                "Wound care": "cleaned and dressed",
            }),
            # dictation-002
            json.dumps(["Second patient", "Pulse rate"]),
            json.dumps({"Pain present": {"value": "no", "span": "no pain reported"}}),
            json.dumps({"Pulse rate": 72, "Blood pressure": {"value": "118/75", "span": "blood pressure 118 over 75"}}),
        ],
    }
    write("golden/nurse/responses.json", json.dumps(responses, indent=2) + "\n")

    # Gold observations (order matters only per multiset scoring).
    refs = [
        {
            "transcript_id": "dictation-001",
            "observations": [
                {"row_key": "Patient resting", "raw_span": "resting comfortably this morning", "value": True},
                {"row_key": "Blood pressure", "raw_span": "one twenty seven over sixty six", "value": "127/66"},
                {"row_key": "Pulse rate", "raw_span": "88", "value": 88.0},
                {"row_key": "Temperature", "raw_span": "37.1", "value": 37.1},
                {"row_key": "Respiration rate", "raw_span": "16", "value": 16.0},
                {"row_key": "Oxygen saturation", "raw_span": "94", "value": 94.0},
                {"row_key": "Breath sounds", "raw_span": "clear", "value": "clear"},
                {"row_key": "Urine output", "raw_span": "300", "value": 300.0},
                {"row_key": "Urine colour", "raw_span": "dark yellow", "value": "dark yellow"},
                {"row_key": "Pain present", "raw_span": "yes", "value": True},
                {"row_key": "Pain severity", "raw_span": "4 out of 10", "value": 4.0},
                {"row_key": "Wound care", "raw_span": "cleaned and dressed", "value": ["cleaned", "dressed"]},
            ],
        },
        {
            "transcript_id": "dictation-002",
            "observations": [
                {"row_key": "Pain present", "raw_span": "no pain reported", "value": False},
                {"row_key": "Blood pressure", "raw_span": "blood pressure 118 over 75", "value": "118/75"},
                {"row_key": "Pulse rate", "raw_span": "72", "value": 72.0},
            ],
        },
    ]
    write("golden/nurse/refs.jsonl", jsonl(refs))

    examples = [
        {
            "id": "ex-001",
            "transcript_text": "Pulse running at 90 this afternoon, pressure 130 over 80.",
            "gold": {"observations": [
                {"row_key": "Pulse rate", "raw_span": "90", "value": 90.0},
                {"row_key": "Blood pressure", "raw_span": "130 over 80", "value": "130/80"},
            ]},
        },
        {
            "id": "ex-002",
            "transcript_text": "Urine amber this shift, output about 250 milliliters.",
            "gold": {"observations": [
                {"row_key": "Urine colour", "raw_span": "amber", "value": "amber"},
                {"row_key": "Urine output", "raw_span": "250", "value": 250.0},
            ]},
        },
    ]
    write("golden/nurse/examples.jsonl", jsonl(examples))


if __name__ == "__main__":
    synur_corpus()
    simord_corpus()
    malformed_corpus()
    golden_orders()
    golden_nurse()
