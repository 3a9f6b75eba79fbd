import re

from setuptools import find_packages, setup

with open('volterra_stealth/__init__.py') as handle:
    version = re.search(r'^__version__ = "([^"]+)"', handle.read(), re.M).group(1)

long_description = open('README.rst').read()

setup(
    name='volterra-stealth',

    version=version,

    description='Stealthy polynomial attacks on LTV loops via Volterra integral equations',
    long_description=long_description,

    license='MIT',

    # See https://pypi.python.org/pypi?%3Aaction=list_classifiers
    classifiers=[
        'Development Status :: 3 - Alpha',

        'Environment :: Console',

        'Intended Audience :: Science/Research',

        'License :: OSI Approved :: MIT License',

        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Topic :: Scientific/Engineering :: Mathematics',
    ],

    keywords='volterra integral-equation control false-data-injection ltv',

    packages=find_packages(exclude=['tests']),
    python_requires='>=3.8',

    setup_requires=['pytest-runner'],
    install_requires=['numpy>=1.17', 'scipy>=1.6', 'jsonschema>=3.0'],
    extras_require={'plots': ['matplotlib>=3.1']},
    tests_require=['pytest', 'mock'],
    entry_points={
        'console_scripts': ['volterra-stealth = volterra_stealth.cli:main'],
    },
)
