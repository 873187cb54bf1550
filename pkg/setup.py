import sys

try:
    from setuptools import setup
except ImportError:
    from distutils.core import setup

# Check system meets basic requirements
assert sys.version_info >= (3, 6), \
    "Python version not supported. Python 3.6+ is required."

install_requires = [
    'scipy', 'numpy', 'matplotlib', 'inflection', 'seaborn', 'pandas'
]

setup(
    name='sfst',
    description='KL-minimizing approximation of sequence models by '
                'weighted automata with failure transitions',
    version='1.0',
    packages=['sfst', 'sfst.data'],
    package_data={'sfst.data': ['*.txt']},
    scripts=['scripts/run_experiments.py'],
    install_requires=install_requires,
    extras_require={'test': ['pytest']},
    entry_points={
        'console_scripts': [
            'sfst = sfst.cli:main',
        ],
    },
)
