"""
Battery Consumption Charts
Battery consumption in time for a plan and, optionally, its re-plan.
"""

from typing import Optional
from pathlib import Path

import plotly.graph_objects as go

from src.planning.failure import MissionTimeline


class BatteryChartGenerator:
    """
    Builds battery-in-time figures: solid lines for the initial plan, dashed
    lines for re-planned tours, vertical markers at t_star and t_max.
    """

    def __init__(self, budget: Optional[float] = None):
        """
        Args:
            budget: Per-vehicle budget drawn as a horizontal line (percent)
        """
        self.budget = budget
        self.vehicle_colors = [
            "#10b981",  # green
            "#3b82f6",  # blue
            "#f59e0b",  # orange
            "#8b5cf6",  # purple
            "#ef4444",  # red
            "#84cc16",  # lime
        ]
        self.replan_color = "#06b6d4"

    def _color(self, vehicle_id: int) -> str:
        return self.vehicle_colors[vehicle_id % len(self.vehicle_colors)]

    def battery_in_time(self, timeline: MissionTimeline,
                        replan: Optional[MissionTimeline] = None,
                        t_star: Optional[float] = None,
                        title: str = "Battery consumption in time") -> go.Figure:
        """
        Args:
            timeline: Initial plan timeline
            replan: Post-failure timeline of the survivors
            t_star: Earliest recoverable failure time (red marker)
            title: Figure title

        Returns:
            Plotly figure object
        """
        fig = go.Figure()

        for track in timeline.tracks:
            fig.add_trace(go.Scatter(
                x=[e.t for e in track.events],
                y=[e.battery for e in track.events],
                mode="lines",
                name=f"UAV {track.vehicle_id}",
                line=dict(color=self._color(track.vehicle_id), width=2),
                hovertemplate="t=%{x:.1f} s<br>battery=%{y:.2f} %<extra></extra>",
            ))

        if replan is not None:
            for track in replan.tracks:
                fig.add_trace(go.Scatter(
                    x=[e.t for e in track.events],
                    y=[e.battery for e in track.events],
                    mode="lines",
                    name=f"UAV {track.vehicle_id} re-plan",
                    line=dict(color=self.replan_color, width=2, dash="dash"),
                ))

        fig.add_vline(x=timeline.t_max, line=dict(color="black", width=1.5))
        if t_star is not None:
            fig.add_vline(x=t_star, line=dict(color="red", width=1.5))
        if self.budget is not None:
            fig.add_hline(y=self.budget, line=dict(color="#6b7280", width=1, dash="dot"))

        fig.update_layout(
            title=title,
            xaxis_title="Time [s]",
            yaxis_title="Battery consumed [%]",
            hovermode="closest",
            template="plotly_white",
            height=500,
            font=dict(family="Arial, sans-serif", size=12),
            legend=dict(orientation="h", yanchor="bottom", y=1.02, xanchor="right", x=1),
        )
        return fig

    @staticmethod
    def write_html(fig: go.Figure, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.write_html(str(path), include_plotlyjs="cdn")
        return path

