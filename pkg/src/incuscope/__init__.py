"""Monthly socio-technical network analytics and sustainability
forecasting for incubating open source projects.

The pipeline: ``ingest`` parses email/commit/project CSVs and resolves
developer identities; ``graph`` builds monthly bipartite snapshots;
``metrics`` measures them; ``forecast`` trains an LSTM over the monthly
feature sequences; ``store`` persists everything as a JSON artifact
tree; ``service`` exposes the tree over HTTP; ``cli`` ties the stages
together.
"""

__version__ = "0.1.0"
