# Verification Suites
