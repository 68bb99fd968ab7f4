import os
import shutil
import subprocess


__all__ = ["ToolNotFound", "ToolFailed", "tool_env_var", "find_tool", "has_tool", "run_tool"]


class ToolNotFound(Exception):
    pass


class ToolFailed(RuntimeError):
    pass


def tool_env_var(name):
    """Environment variable that overrides the location of the external program ``name``,
    e.g. ``DMCODEC_ESPEAK_NG`` for ``espeak-ng``.
    """
    return "DMCODEC_" + name.upper().replace("-", "_")


def find_tool(name):
    env_var  = tool_env_var(name)
    override = os.environ.get(env_var)
    path     = shutil.which(override or name)
    if path is not None:
        return path
    if override:
        raise ToolNotFound("External program {} is not runnable at {} (set by {})"
                           .format(name, override, env_var))
    raise ToolNotFound("External program {} is not installed; add it to PATH or point {} "
                       "at it".format(name, env_var))


def has_tool(name):
    try:
        find_tool(name)
    except ToolNotFound:
        return False
    return True


def run_tool(name, args, *, input=None, timeout=60):
    """Run the external program ``name`` and return its standard output as text."""
    completed = subprocess.run([find_tool(name), *args], input=input, timeout=timeout,
                               stdout=subprocess.PIPE, stderr=subprocess.PIPE,
                               encoding="utf-8", check=False)
    if completed.returncode != 0:
        raise ToolFailed("{} exited with status {}: {}"
                         .format(name, completed.returncode, completed.stderr.strip()))
    return completed.stdout
