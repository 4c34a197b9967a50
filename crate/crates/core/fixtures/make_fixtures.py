"""Authors the deterministic fixture corpora used by tests and the demo config.

Run from this directory: python3 make_fixtures.py
"""
import json
import random
import re

rng = random.Random(20240611)

pool_names = set()
with open("../assets/name_pools.tsv") as f:
    next(f)
    for line in f:
        pool_names.add(line.split("\t")[1])

SKILLS = {
    "Data Analyst": ["SQL", "Python", "Tableau", "Excel", "dashboards", "regression", "A/B testing",
                     "data cleaning", "Power BI", "forecasting", "ETL pipelines", "statistics"],
    "UX Designer": ["Figma", "user research", "wireframes", "prototyping", "usability testing",
                    "design systems", "accessibility", "journey maps", "Sketch", "interaction design"],
    "Information Technology": ["Active Directory", "networking", "helpdesk", "Linux", "VMware",
                               "patch management", "firewalls", "ITIL", "scripting", "backups"],
    "Product Manager": ["roadmaps", "user stories", "stakeholder alignment", "OKRs", "market research",
                        "pricing", "agile", "launch planning", "analytics", "customer interviews"],
    "Teacher": ["lesson planning", "classroom management", "curriculum design", "assessment",
                "differentiated instruction", "parent communication", "literacy", "STEM activities",
                "mentoring", "special education"],
    "Chef": ["menu development", "food safety", "inventory", "plating", "kitchen leadership",
             "cost control", "pastry", "sourcing", "catering", "sanitation"],
}
COMPANIES = ["Northwind Analytics", "Globex", "Initech", "Umbrella Health", "Stark Logistics",
             "Wayne Retail", "Acme Foods", "Hooli", "Vandelay Imports", "Soylent Labs",
             "Pied Piper", "Gringotts Bank", "Oceanic Air", "Blue Harbor Schools"]
SCHOOLS = ["State University", "Tech Institute", "Lakeside College", "Riverside University",
           "Metropolitan University", "Coastal College"]
VERBS = ["Led", "Built", "Designed", "Improved", "Managed", "Delivered", "Automated", "Launched",
         "Coordinated", "Reduced", "Streamlined", "Mentored"]
OUTCOMES = ["reducing costs by {n}%", "cutting turnaround time by {n}%", "serving {n}0 clients",
            "improving satisfaction scores by {n} points", "supporting a team of {n}",
            "raising retention by {n}%"]
ADJ = ["excellent", "strong", "reliable", "creative", "careful", "successful", "effective",
       "innovative", "efficient", "outstanding"]


def bullet(prof):
    s = rng.sample(SKILLS[prof], 2)
    return "- {} {} work using {} and {}, {}.".format(
        rng.choice(VERBS), rng.choice(ADJ), s[0], s[1], rng.choice(OUTCOMES).format(n=rng.randint(2, 9)))


def resume_body(prof, placeholder=False):
    lines = []
    if placeholder:
        lines.append("{{NAME}}")
    lines.append(prof)
    lines.append("")
    lines.append("SUMMARY")
    lines.append("{} {} professional with {} years of experience in {} and {}.".format(
        "Dedicated", prof.lower(), rng.randint(2, 15),
        *rng.sample(SKILLS[prof], 2)))
    lines.append("")
    lines.append("EXPERIENCE")
    for _ in range(rng.randint(2, 3)):
        lines.append("{} at {} ({}-{})".format(prof, rng.choice(COMPANIES), rng.randint(2008, 2016),
                                               rng.randint(2017, 2024)))
        for _ in range(rng.randint(2, 4)):
            lines.append(bullet(prof))
    lines.append("")
    lines.append("EDUCATION")
    lines.append("B.S., {}, {}".format(rng.choice(SCHOOLS), rng.randint(2004, 2014)))
    lines.append("")
    lines.append("SKILLS")
    lines.append(", ".join(rng.sample(SKILLS[prof], 5)))
    body = "\n".join(lines)
    for tok in re.findall(r"[A-Za-z0-9]+", body):
        assert tok not in pool_names, tok
    return body


JOB_TEXT = {
    "Data Analyst": "We are hiring a Data Analyst to turn raw data into decisions. You will write SQL, build Tableau and Power BI dashboards, run A/B testing and regression analysis, and partner with product teams.\nRequirements: 3+ years with Python, statistics, ETL pipelines and forecasting.",
    "UX Designer": "Join our design team as a UX Designer. You will lead user research, create wireframes and prototypes in Figma, run usability testing, and grow our design systems with accessibility in mind.\nRequirements: portfolio showing interaction design and journey maps.",
    "IT": "IT Support Engineer wanted to run our networking, Linux servers, VMware hosts and helpdesk. You will own patch management, firewalls and backups following ITIL practice.\nRequirements: scripting experience and Active Directory administration.",
    "Product Manager": "Product Manager needed to own roadmaps and user stories, drive stakeholder alignment with OKRs, run customer interviews and market research, and plan launches.\nRequirements: agile delivery, analytics fluency and pricing experience.",
    "Teacher": "Elementary Teacher position: lesson planning, classroom management, curriculum design and assessment. You will provide differentiated instruction, literacy and STEM activities, and clear parent communication.\nRequirements: certification and special education experience preferred.",
}


def record_resume(rid, prof, source, body):
    return {"schema_version": 1, "kind": "resume", "id": rid, "profession": prof,
            "source": source, "lineage": [], "body": body}


def record_job(jid, occ):
    return {"schema_version": 1, "kind": "job", "id": jid, "occupation": occ, "body": JOB_TEXT[occ]}


def write(path, records):
    with open(path, "w") as f:
        for r in records:
            f.write(json.dumps(r, ensure_ascii=False) + "\n")


# Mini corpus: 12 resumes, 3 job posts.
mini = []
plan = ["Data Analyst"] * 4 + ["UX Designer"] * 3 + ["Information Technology"] * 3 + ["Chef"] * 2
for i, prof in enumerate(plan):
    source = "kaggle" if prof in ("Information Technology", "Chef") else "generated"
    mini.append(record_resume("mini-{:02d}".format(i + 1), prof, source,
                              resume_body(prof, placeholder=(i == 0))))
mini += [record_job("job-da", "Data Analyst"), record_job("job-ux", "UX Designer"),
         record_job("job-it", "IT")]
write("mini_corpus.jsonl", mini)
with open("mini_corpus.manifest.json", "w") as f:
    json.dump({"resumes": 12, "jobs": 3,
               "groups": {"Data Analyst": [4, 1], "UX Designer": [3, 1], "IT": [3, 1],
                          "unmatched": [2, 0]}}, f, indent=2)
    f.write("\n")

# Audit corpus: 40 resumes, 3 job posts.
audit = []
plan = ["Data Analyst"] * 14 + ["Product Manager"] * 13 + ["Teacher"] * 13
for i, prof in enumerate(plan):
    audit.append(record_resume("r{:03d}".format(i + 1), prof, "generated", resume_body(prof)))
audit += [record_job("job-analyst", "Data Analyst"), record_job("job-pm", "Product Manager"),
          record_job("job-teacher", "Teacher")]
write("audit_corpus.jsonl", audit)
