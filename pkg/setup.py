from setuptools import setup, find_packages

with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

with open("requirements.txt", "r", encoding="utf-8") as fh:
    requirements = [line.strip() for line in fh if line.strip() and not line.startswith("#")]

setup(
    name="stakesim",
    version="1.0.0",
    author="JustineDevs",
    author_email="contact@justinedevs.com",
    description="A seedable proof-of-stake longest-chain simulator with property checkers",
    long_description=long_description,
    long_description_content_type="text/markdown",
    url="https://github.com/justinedevs/stakesim",
    packages=find_packages(exclude=["examples", "examples.*"]),
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "Intended Audience :: Developers",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Topic :: Scientific/Engineering",
        "Topic :: System :: Distributed Computing",
    ],
    python_requires=">=3.8",
    install_requires=requirements,
    extras_require={
        "dev": [
            "pytest>=7.0.0",
            "pytest-cov>=4.0.0",
            "hypothesis>=6.80.0",
            "black>=23.0.0",
            "flake8>=6.0.0",
            "mypy>=1.0.0",
            "types-PyYAML>=6.0",
        ],
    },
    entry_points={
        "console_scripts": [
            "stakesim=stakesim.cli.main:main",
        ],
    },
    include_package_data=True,
    zip_safe=False,
    keywords="proof-of-stake blockchain consensus simulation common-prefix chain-quality",
    project_urls={
        "Bug Reports": "https://github.com/justinedevs/stakesim/issues",
        "Source": "https://github.com/justinedevs/stakesim",
        "Documentation": "https://github.com/justinedevs/stakesim#readme",
    },
)
