import os

from setuptools import setup, find_packages

here = os.path.abspath(os.path.dirname(__file__))

with open(os.path.join(here, 'README.rst')) as f:
    README = f.read()

with open(os.path.join(here, 'CHANGES.rst')) as f:
    CHANGES = f.read()


requires = ['numpy', 'scipy', 'psutil', 'konfig', 'ujson']


setup(name='banditlab',
      version='0.1',
      packages=find_packages(),
      include_package_data=True,
      package_data={'banditlab.tests': ['*.cfg']},
      description='Regimes and convergence rates of the two-armed bandit '
                  'linear reward-inaction algorithm.',
      long_description=README + '\n\n' + CHANGES,
      zip_safe=False,
      license='APLv2.0',
      classifiers=[
        "Programming Language :: Python",
        "Programming Language :: Python :: 3",
        "Topic :: Scientific/Engineering :: Mathematics",
      ],
      python_requires='>=3.8',
      install_requires=requires,
      tests_require=['pytest', 'mock'],
      entry_points="""
      [console_scripts]
      banditlab = banditlab.main:main
      """)
