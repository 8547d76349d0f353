import hypothesis

# property tests build whole graphs per example; wall-clock deadlines misfire
# under coverage or load, so cap by example count instead
hypothesis.settings.register_profile(
    "suite", deadline=None, max_examples=60, derandomize=True)
hypothesis.settings.load_profile("suite")
