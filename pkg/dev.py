import os

# Set environment variables for a local smoke run
os.environ['EXPERIMENT_NAME'] = 'campanato'
os.environ['RUN_ID'] = 'test-all-suites'
os.environ['ENABLE_ENGINE_CACHE'] = 'true'  # Cache eigenpairs for faster reruns
os.environ['CAMPANATO_CACHE_DIR'] = 'data/engine_cache'
os.environ['CAMPANATO_DEBUG_LOG'] = 'true'
os.environ['DATA_DIR'] = 'data'

from pathlib import Path

from main import EXIT_OK, run

print("Running every committed experiment configuration...")
print("=" * 60)

results = {}
for i, config_path in enumerate(sorted(Path("configs").glob("*.toml")), start=1):
    print(f"\n{i}. {config_path.stem}...")
    try:
        code = run('experiment', config_path, Path("out") / "dev")
        results[config_path.stem] = code
        mark = "✓" if code == EXIT_OK else "✗"
        print(f"{mark} {config_path.stem}: exit code {code}")
    except Exception as e:
        results[config_path.stem] = None
        print(f"✗ Error: {e}")
        import traceback
        traceback.print_exc()

print("\n" + "=" * 60)
passed = sum(1 for code in results.values() if code == EXIT_OK)
print(f"\n{passed}/{len(results)} suites met all criteria")
