from hypothesis import settings

settings.register_profile("default", deadline=None)
settings.load_profile("default")

# filled by test_acceptance: criterion number -> (passed, message)
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, msg = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {msg}")
