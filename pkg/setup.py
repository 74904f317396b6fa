from setuptools import setup, find_packages

with open('README.md', encoding='utf-8') as handle:
    long_description = handle.read()

setup(
    name='chiraldyn',
    version='0.1.0',
    description='Chirality-induced quantum nonreciprocity simulator for light-spin interfaces',
    long_description=long_description,
    long_description_content_type='text/markdown',
    author='chiraldyn developers',
    license='MIT',
    packages=find_packages(exclude=['tests']),
    package_data={'chiraldyn': ['scenarios/*.json']},
    python_requires='>=3.8',
    install_requires=['numpy', 'scipy', 'sympy', 'pandas'],
    extras_require={'test': ['pytest', 'hypothesis']},
    entry_points={'console_scripts': ['chiraldyn=chiraldyn.Cli:main']},
)
