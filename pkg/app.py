"""
shadowtree dashboard
Streamlit page that loads emitted reports, or runs a shipped configuration,
and plots profiles, seed selection, Anosov fits and cones.
"""

import json
from pathlib import Path

import pandas as pd
import streamlit as st

from shadowtree.charts import (
    create_arc_chart,
    create_cone_chart,
    create_hull_chart,
    create_profile_chart,
    create_sequence_chart,
    create_w_trace_chart,
)
from shadowtree.config import load_config
from shadowtree.errors import ConfigError
from shadowtree.pipeline import run_pipeline
from shadowtree.reports import canonical_value, export_to_excel

CONFIG_DIR = Path(__file__).parent / 'configs'

st.set_page_config(
    page_title="shadowtree",
    layout="wide",
    initial_sidebar_state="expanded",
)


def render_run(data, artifacts=None):
    """Show one single-run report dict."""
    artifacts = artifacts or {}
    col1, col2, col3, col4 = st.columns(4)
    col1.metric("Status", data.get('status', '-'))
    col2.metric("Stage", data.get('stage', '-'))
    certificate = data.get('certificate')
    col3.metric("Certificate", certificate['status'] if certificate else "skipped")
    delta = data.get('delta', {}).get('value')
    col4.metric("Target delta", f"{delta:.4f}" if isinstance(delta, float) else "-")
    st.caption(data.get('metric', ''))

    if data.get('error'):
        st.error(f"{data['error']['code']}: {data['error']['message']}")

    tab1, tab2, tab3, tab4 = st.tabs(["Exponents", "Seed", "Certificate", "Anosov"])

    with tab1:
        st.plotly_chart(create_profile_chart(data), use_container_width=True)
        gap = data.get('gap_report')
        if gap:
            st.dataframe(pd.DataFrame(gap['assertions'])[['name', 'holds', 'lhs', 'rhs']],
                         use_container_width=True)

    with tab2:
        trace = data.get('construction', {}).get('selection', {}).get('trace')
        if trace is None and data.get('error'):
            trace = data['error']['details'].get('trace')
        if trace:
            st.plotly_chart(create_w_trace_chart(trace), use_container_width=True)
        if 'shadows' in artifacts:
            st.plotly_chart(create_arc_chart(artifacts['shadows']), use_container_width=True)

    with tab3:
        if certificate:
            rows = [{'check': name, 'passed': check['passed'], 'checked': check['checked'],
                     'unresolved': check['unresolved']} for name, check in sorted(certificate['checks'].items())]
            st.dataframe(pd.DataFrame(rows), use_container_width=True)
            st.json(certificate['constants'])
        else:
            st.info("No certificate in this report")

    with tab4:
        fit = data.get('anosov_fit')
        if fit:
            st.plotly_chart(create_hull_chart(fit), use_container_width=True)
        if 'cone_vectors' in artifacts:
            st.plotly_chart(create_cone_chart(artifacts['cone_vectors']), use_container_width=True)
        if data.get('dphi'):
            st.json(data['dphi'])
        if not fit:
            st.info("Anosov stage not run for this model")


def main():
    st.title("shadowtree")
    st.sidebar.title("Report source")
    source = st.sidebar.radio("Source", ["Upload report", "Run configuration"])

    if source == "Upload report":
        uploaded = st.sidebar.file_uploader("Report JSON", type=['json'])
        if uploaded is None:
            st.info("Upload a report written by `python -m shadowtree`")
            return
        data = json.load(uploaded)
        if 'runs' in data:
            st.plotly_chart(create_sequence_chart(data), use_container_width=True)
            st.dataframe(pd.DataFrame(data['sequence']), use_container_width=True)
            index = st.selectbox("Run", range(1, len(data['runs']) + 1))
            render_run(data['runs'][index - 1])
        else:
            render_run(data)
        return

    configs = sorted(p.name for p in CONFIG_DIR.glob('*.json'))
    name = st.sidebar.selectbox("Configuration", configs)
    threads = st.sidebar.number_input("Threads", min_value=1, max_value=16, value=1)
    if not st.sidebar.button("Run"):
        return
    try:
        config = load_config(CONFIG_DIR / name)
    except ConfigError as exc:
        st.error(exc.message)
        for line in exc.field_errors:
            st.write(line)
        return
    with st.spinner("Running pipeline..."):
        report = run_pipeline(config, threads=int(threads))
    render_run(canonical_value(report.to_dict()), report.artifacts)
    st.download_button("Download workbook", data=export_to_excel(report),
                       file_name=f"{config.output.name}.xlsx",
                       mime="application/vnd.openxmlformats-officedocument.spreadsheetml.sheet")


if __name__ == "__main__":
    main()
