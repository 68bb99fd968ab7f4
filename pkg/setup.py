from setuptools import setup, find_packages


def scm_version():
    def local_scheme(version):
        if version.tag and not version.distance:
            return version.format_with("")
        else:
            return version.format_choice("+{node}", "+{node}.dirty")
    return {
        "relative_to": __file__,
        "version_scheme": "guess-next-dev",
        "local_scheme": local_scheme
    }


setup(
    name="dmcodec",
    use_scm_version=scm_version(),
    description="Speech tokenizer with language- and speech-model guided distillation",
    license="BSD",
    python_requires="~=3.8",
    setup_requires=["wheel", "setuptools", "setuptools_scm"],
    install_requires=[
        "torch>=2.1",       # for parametrized weight normalization
        "torchaudio>=2.1",  # for dmcodec.losses mel filterbanks
        "numpy>=1.20",
        "scipy>=1.7",       # for WAV files
        "deepsig~=1.2",     # for dmcodec.eval.aso
        "pyvcd~=0.2.2",     # for dmcodec.train.trace
        "Jinja2~=3.0",      # for dmcodec.eval.report
    ],
    packages=find_packages(exclude=("tests", "tests.*")),
    entry_points={
        "console_scripts": [
            "dmcodec = dmcodec.cli:main",
        ]
    },
)
