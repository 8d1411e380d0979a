from setuptools import setup

# see https://setuptools.pypa.io/en/latest/userguide/pyproject_config.html
setup()
