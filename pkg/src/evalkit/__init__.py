"""Quality metrics, the green-screen baseline and the ablation report."""
